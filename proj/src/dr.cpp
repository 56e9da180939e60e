#include "dlme/dr.hpp"

#include "dlme/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dlme {

DrPlan allocate_dr(const Eigen::MatrixXd& signal, const Eigen::VectorXd& budget, const Eigen::MatrixXd& caps,
                   const BoolMatrix* deprioritize) {
    const Index nb = signal.rows(), T = signal.cols();
    if (caps.rows() != nb || caps.cols() != T || budget.size() != T)
        fail(ErrorKind::Validation, "signal, caps and budget shapes disagree");
    if (deprioritize && (deprioritize->rows() != nb || deprioritize->cols() != T))
        fail(ErrorKind::Validation, "exclusion mask shape disagrees with the signal");
    if ((caps.array() < 0.0).any() || (budget.array() < 0.0).any())
        fail(ErrorKind::Validation, "caps and budgets must be non-negative");
    if (!signal.allFinite()) fail(ErrorKind::Validation, "signal contains non-finite values");

    DrPlan plan;
    plan.response = Eigen::MatrixXd::Zero(nb, T);
    plan.budget = budget;
    plan.caps = caps;
    std::vector<Index> order(static_cast<std::size_t>(nb));
    for (Index t = 0; t < T; ++t) {
        const double total_cap = caps.col(t).sum();
        if (budget(t) > total_cap * (1.0 + 1e-12)) {
            std::ostringstream msg;
            msg << "hour " << t + 1 << ": budget " << budget(t) << " exceeds total cap " << total_cap;
            fail(ErrorKind::Validation, msg.str());
        }
        std::iota(order.begin(), order.end(), Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
            if (deprioritize) {
                const bool fa = (*deprioritize)(a, t), fb = (*deprioritize)(b, t);
                if (fa != fb) return !fa;
            }
            return signal(a, t) > signal(b, t);
        });
        double left = budget(t);
        for (Index i : order) {
            if (left <= 0.0) break;
            const double take = std::min(caps(i, t), left);
            plan.response(i, t) = take;
            left -= take;
        }
        // close the budget exactly despite rounding in the running remainder
        if (budget(t) > 0.0) {
            const double gap = budget(t) - plan.response.col(t).sum();
            for (Index i : order)
                if (plan.response(i, t) > 0.0 && plan.response(i, t) + gap >= 0.0 &&
                    plan.response(i, t) + gap <= caps(i, t)) {
                    plan.response(i, t) += gap;
                    break;
                }
        }
    }
    return plan;
}

DrPlan allocate_dr_daily(const Eigen::MatrixXd& signal, double energy, const Eigen::MatrixXd& caps,
                         double delta_t, const BoolMatrix* deprioritize) {
    if (!(delta_t > 0.0)) fail(ErrorKind::Validation, "time step must be positive");
    const Index nb = signal.rows(), T = signal.cols();
    if (caps.rows() != nb || caps.cols() != T)
        fail(ErrorKind::Validation, "signal, caps and budget shapes disagree");
    if (deprioritize && (deprioritize->rows() != nb || deprioritize->cols() != T))
        fail(ErrorKind::Validation, "exclusion mask shape disagrees with the signal");
    // column-major flattening puts hour before bus in the tie order
    const Eigen::Map<const Eigen::MatrixXd> flat_sig(signal.data(), nb * T, 1);
    const Eigen::MatrixXd flat_caps = Eigen::Map<const Eigen::MatrixXd>(caps.data(), nb * T, 1) * delta_t;
    BoolMatrix flat_mask;
    if (deprioritize) flat_mask = Eigen::Map<const BoolMatrix>(deprioritize->data(), nb * T, 1);
    const DrPlan flat = allocate_dr(flat_sig, Eigen::VectorXd::Constant(1, energy), flat_caps,
                                    deprioritize ? &flat_mask : nullptr);
    DrPlan plan;
    plan.response = Eigen::Map<const Eigen::MatrixXd>(flat.response.data(), nb, T) / delta_t;
    plan.budget = plan.response.colwise().sum().transpose();
    plan.caps = caps;
    return plan;
}

Eigen::VectorXd peak_budget(const ScenarioSet& s, DemandKind kind, double pct) {
    if (!(pct >= 0.0)) fail(ErrorKind::Validation, "budget percentage must be non-negative");
    const Eigen::MatrixXd& d = kind == DemandKind::Active ? s.p_demand : s.q_demand;
    const double peak = d.cols() > 0 ? d.colwise().sum().maxCoeff() : 0.0;
    return Eigen::VectorXd::Constant(d.cols(), peak * pct / 100.0);
}

Redispatch apply_and_redispatch(const NetworkCase& c, const ScenarioSet& s, const DrPlan& plan,
                                const SolverSettings& settings, const Vec* warm_start) {
    ScenarioSet reduced = s;
    Eigen::MatrixXd& d = plan.kind == DemandKind::Active ? reduced.p_demand : reduced.q_demand;
    if (plan.response.rows() != d.rows() || plan.response.cols() != d.cols())
        fail(ErrorKind::Validation, "plan shape does not match the scenario");
    d -= plan.response;
    // rounding in the plan can leave a demand a few ulps below zero
    for (Index i = 0; i < d.size(); ++i) {
        if (d(i) < -1e-9) fail(ErrorKind::Validation, "demand response exceeds demand");
        d(i) = std::max(d(i), 0.0);
    }
    Redispatch out;
    const ConeProgram prog = build_program(c, reduced);
    out.result = solve_dispatch(prog, settings, warm_start);
    switch (out.result.bundle.status) {
        case SolveStatus::Optimal: break;
        case SolveStatus::Infeasible:
            fail(ErrorKind::Infeasible, "re-dispatch after demand response is infeasible");
        default:
            fail(ErrorKind::Solver, std::string("re-dispatch did not solve: ") + out.result.bundle.message);
    }
    out.emission = total_emission(out.result.dispatch, c);
    return out;
}

std::optional<double> enhance_metric(double initial, double post_dlme, double post_baseline) {
    const double base = initial - post_baseline;
    if (base == 0.0 || !std::isfinite(base)) return std::nullopt;
    return ((initial - post_dlme) / base - 1.0) * 100.0;
}

}  // namespace dlme
