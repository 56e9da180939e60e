#include "dlme/emission.hpp"

#include "dlme/errors.hpp"

#include <cmath>
#include <iostream>

namespace dlme {

EmissionModel EmissionModel::from_case(const NetworkCase& c) {
    EmissionModel m;
    m.substation_rate = c.substation.emission_rate;
    for (const auto& g : c.sync_dgs) m.sync_rates.push_back(g.emission_rate);
    m.storage_rate = c.options.storage_emission_rate;
    m.delta_t = c.options.delta_t;
    return m;
}

Vec emission_gradient(const EmissionModel& model, const ConeProgram& prog) {
    const VariableIndex& ix = prog.index;
    if (model.sync_rates.size() != ix.sg_p.size())
        fail(ErrorKind::Validation, "emission model and program disagree on synchronous DG count");
    const double k = prog.base_mva * model.delta_t;
    Vec g = Vec::Zero(prog.problem.A.cols());
    for (int t = 0; t < ix.horizon; ++t) {
        const auto tt = static_cast<std::size_t>(t);
        if (ix.p_sub[tt] >= 0) g(ix.p_sub[tt]) += model.substation_rate * k;
        for (std::size_t u = 0; u < ix.sg_p.size(); ++u)
            if (ix.sg_p[u][tt] >= 0) g(ix.sg_p[u][tt]) += model.sync_rates[u] * k;
        if (model.storage_rate != 0.0)
            for (const auto& row : ix.st_dis)
                if (row[tt] >= 0) g(row[tt]) += model.storage_rate * k;
    }
    return g;
}

namespace {

void require_optimal(const DispatchResult& r) {
    switch (r.bundle.status) {
        case SolveStatus::Optimal: return;
        case SolveStatus::Infeasible: fail(ErrorKind::Infeasible, "dispatch is infeasible: " + r.bundle.message);
        default:
            fail(ErrorKind::Solver, std::string("dispatch did not solve (") + to_string(r.bundle.status) +
                                        "): " + r.bundle.message);
    }
}

// balance rows carry b = -demand / S, so d e / d demand = -gb / (S dt)
void fill_signals(const ParameterGradient& grad, const ConeProgram& prog, Eigen::MatrixXd& active,
                  Eigen::MatrixXd& reactive) {
    const VariableIndex& ix = prog.index;
    const auto nb = static_cast<Index>(ix.balance_p.size());
    const double k = prog.base_mva * prog.delta_t;
    active.resize(nb, ix.horizon);
    reactive.resize(nb, ix.horizon);
    for (Index i = 0; i < nb; ++i)
        for (int t = 0; t < ix.horizon; ++t) {
            const auto ii = static_cast<std::size_t>(i);
            const auto tt = static_cast<std::size_t>(t);
            active(i, t) = -grad.gb(ix.balance_p[ii][tt]) / k;
            reactive(i, t) = -grad.gb(ix.balance_q[ii][tt]) / k;
        }
}

// An entry is flagged when the derivative taken from the other side of some
// kink differs from the reported one, i.e. the two one-sided derivatives of
// emission in that demand entry disagree.
void flag_kinks(const DerivativeContext& ctx, const ConeProgram& prog, const Vec& gx, DlmeMatrix& out) {
    const Index m = prog.problem.A.rows();
    for (Index row : ctx.kink_rows()) {
        out.kink_rows.push_back(prog.row_names[static_cast<std::size_t>(row)]);
        const DerivativeContext alt = ctx.with_other_side(row);
        Eigen::MatrixXd act, rea;
        fill_signals(alt.adjoint(gx, Vec::Zero(m), Vec::Zero(m)), prog, act, rea);
        auto differs = [](double a, double b) { return std::abs(a - b) > 1e-6 + 1e-5 * std::abs(a); };
        for (Index i = 0; i < act.rows(); ++i)
            for (Index t = 0; t < act.cols(); ++t) {
                if (differs(out.active(i, t), act(i, t))) out.kink_active(i, t) = true;
                if (differs(out.reactive(i, t), rea(i, t))) out.kink_reactive(i, t) = true;
            }
    }
}

}  // namespace

DlmeMatrix compute_dlme(const NetworkCase& c, const ConeProgram& prog, const DispatchResult& sol,
                        const std::string& label, double kink_tol) {
    require_optimal(sol);
    const DerivativeContext ctx = DerivativeContext::make(prog.problem, sol.bundle, kink_tol);
    const Index m = prog.problem.A.rows();
    const Vec gx = emission_gradient(EmissionModel::from_case(c), prog);
    const ParameterGradient grad = ctx.adjoint(gx, Vec::Zero(m), Vec::Zero(m));

    const auto nb = static_cast<Index>(prog.index.balance_p.size());
    const int T = prog.index.horizon;
    DlmeMatrix out;
    out.scenario = label;
    fill_signals(grad, prog, out.active, out.reactive);
    out.kink_active.setConstant(nb, T, false);
    out.kink_reactive.setConstant(nb, T, false);
    out.approximate = grad.approximate || ctx.approximate();
    flag_kinks(ctx, prog, gx, out);
    if (out.flagged() == 2 * nb * T)
        std::cerr << "warning: every DLME entry of '" << label
                  << "' is at a kink; the solution is degenerate and the signals are generalized derivatives\n";
    return out;
}

DlmeRun compute_dlme(const NetworkCase& c, const ScenarioSet& s, const SolverSettings& settings) {
    DlmeRun run;
    run.program = build_program(c, s);
    run.dispatch = solve_dispatch(run.program, settings);
    require_optimal(run.dispatch);
    run.emission = total_emission(run.dispatch.dispatch, c);
    run.matrix = compute_dlme(c, run.program, run.dispatch, s.label, settings.kink_tol);
    return run;
}

FdOracle::FdOracle(const NetworkCase& c, const ScenarioSet& s, const SolverSettings& settings)
    : case_(c), settings_(settings), prog_(build_program(c, s)) {
    settings_.tol = std::min(settings_.tol, 1e-12);
    const DispatchResult base = solve_dispatch(prog_, settings_);
    require_optimal(base);
    z0_ = base.bundle.z;
    base_emission_ = total_emission(base.dispatch, c);
}

std::optional<double> FdOracle::emission_at(Index row, double shift) const {
    ConeProgram p = prog_;
    p.problem.b(row) -= shift;  // demand + shift
    DispatchResult r = solve_dispatch(p, settings_, &z0_);
    if (!r.bundle.optimal()) {
        // the polish target can sit below the attainable residual floor
        SolverSettings loose = settings_;
        loose.tol = 1e-10;
        r = solve_dispatch(p, loose);
    }
    if (!r.bundle.optimal()) return std::nullopt;
    return total_emission(r.dispatch, case_);
}

FdEstimate FdOracle::operator()(std::size_t bus, int hour, DemandKind which, double delta) const {
    if (!(delta > 0.0) || !std::isfinite(delta))
        fail(ErrorKind::Validation, "finite-difference step must be positive");
    const VariableIndex& ix = prog_.index;
    if (bus >= ix.balance_p.size() || hour < 0 || hour >= ix.horizon)
        fail(ErrorKind::Validation, "finite-difference entry out of range");
    const auto tt = static_cast<std::size_t>(hour);
    const Index row = which == DemandKind::Active ? ix.balance_p[bus][tt] : ix.balance_q[bus][tt];
    const double k = prog_.base_mva * prog_.delta_t;

    const auto up = emission_at(row, delta);
    const auto down = emission_at(row, -delta);
    FdEstimate est;
    if (up && down) {
        est.value = (*up - *down) / (2.0 * delta * k);
    } else if (up) {
        est.value = (*up - base_emission_) / (delta * k);
        est.one_sided = true;
    } else if (down) {
        est.value = (base_emission_ - *down) / (delta * k);
        est.one_sided = true;
    } else {
        fail(ErrorKind::Infeasible, "both perturbed problems failed to solve");
    }
    return est;
}

FdEstimate fd_oracle(const NetworkCase& c, const ScenarioSet& s, std::size_t bus, int hour,
                     DemandKind which, double delta, const SolverSettings& settings) {
    if (!(delta > 0.0) || !std::isfinite(delta))
        fail(ErrorKind::Validation, "finite-difference step must be positive");
    return FdOracle(c, s, settings)(bus, hour, which, delta);
}

}  // namespace dlme
