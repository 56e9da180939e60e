// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "dlme/cone.hpp"
#include "dlme/diff.hpp"
#include "dlme/pipeline.hpp"
#include "dlme/report.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace dlme;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using Matrix = Eigen::MatrixXd;

namespace {

std::string data(const std::string& name) { return std::string(DLME_DATA_DIR) + "/" + name; }

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
}

// Runs a criterion; any exception counts as a failure.
void criterion(int id, const std::function<std::pair<bool, std::string>()>& body) {
    try {
        const auto [pass, detail] = body();
        report(id, pass, detail);
    } catch (const std::exception& e) {
        report(id, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

Vec randn(std::mt19937_64& rng, Index n) {
    std::normal_distribution<double> nd;
    Vec v(n);
    for (Index i = 0; i < n; ++i) v(i) = nd(rng);
    return v;
}

ConeProblem lp_toy() {  // min x s.t. x >= 1
    ConeProblem p;
    p.A = SpMat(1, 1);
    p.A.insert(0, 0) = -1.0;
    p.b = Vec::Constant(1, -1.0);
    p.c = Vec::Constant(1, 1.0);
    p.cones = {{ConeKind::Nonnegative, 1}};
    return p;
}

ConeProblem soc_toy() {  // min t s.t. ||(a, b)|| <= t, a = 3, b = 4
    Matrix A = Matrix::Zero(5, 3);
    A(0, 1) = 1.0;
    A(1, 2) = 1.0;
    A.bottomRows(3) = -Matrix::Identity(3, 3);
    ConeProblem p;
    p.A = A.sparseView();
    p.b = Vec::Zero(5);
    p.b(0) = 3.0;
    p.b(1) = 4.0;
    p.c = Vec::Unit(3, 0);
    p.cones = {{ConeKind::Zero, 2}, {ConeKind::SecondOrder, 3}};
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Best objective over the vertices of {sum x = B, 0 <= x <= cap}.
double vertex_optimum(const Vec& s, const Vec& cap, double B) {
    const Index n = s.size();
    double best = -std::numeric_limits<double>::infinity();
    for (Index free = -1; free < n; ++free)
        for (int mask = 0; mask < (1 << n); ++mask) {
            Vec x(n);
            double used = 0.0;
            for (Index i = 0; i < n; ++i) {
                x(i) = (mask >> i) & 1 ? cap(i) : 0.0;
                if (i != free) used += x(i);
            }
            if (free >= 0) {
                x(free) = B - used;
                if (x(free) < -1e-12 || x(free) > cap(free) + 1e-12) continue;
            } else if (std::abs(used - B) > 1e-12) {
                continue;
            }
            best = std::max(best, s.dot(x));
        }
    return best;
}

}  // namespace

int main() {
    const auto t_all = Clock::now();
    const SolverSettings settings;
    const NetworkCase tutorial = load_case(data("tutorial6.json"));
    const NetworkCase ieee33 = load_case(data("ieee33.json"));
    const auto tutorial_sets = read_scenarios(data("tutorial6_scenarios.csv"), tutorial);
    const auto typical = read_scenarios(data("ieee33_typical.csv"), ieee33);

    criterion(1, [&] {
        const auto t0 = Clock::now();
        RunConfig cfg;
        cfg.signals = {"dlme", "dlme_q"};
        int total = 0, bad = 0, active = 0, reactive = 0;
        double worst = 0.0;
        auto run = [&](const NetworkCase& c, const std::vector<ScenarioSet>& sets, int count) {
            std::vector<ScenarioSignals> sig;
            for (const auto& s : sets) sig.push_back(compute_signals(c, s, cfg));
            for (const FdRecord& r : fd_audit(c, sets, sig, count, 1e-4, 2023, settings)) {
                ++total;
                bad += r.pass ? 0 : 1;
                (r.kind == DemandKind::Active ? active : reactive) += 1;
                worst = std::max(worst, std::abs(r.adjoint - r.fd) / std::max(1e-2, std::abs(r.fd)));
            }
        };
        run(tutorial, tutorial_sets, 50);
        run(ieee33, {typical.at(0)}, 60);
        const double secs = seconds_since(t0);
        return std::pair{total >= 100 && bad == 0 && active > 0 && reactive > 0 && secs < 600.0,
                         fmt("%.0f sampled entries (%.0f active, %.0f reactive), %.0f outside tolerance", total, active,
                             reactive, bad) +
                             fmt(", worst scaled deviation %.2e, %.1f s", worst, secs)};
    });

    criterion(2, [&] {
        double toy_kkt = 0.0, toy_res = 0.0, grid_kkt = 0.0, grid_res = 0.0;
        bool values = true;
        for (const ConeProblem& p : {lp_toy(), soc_toy()}) {
            SolverSettings tight = settings;
            tight.kkt_tol = 1e-7;
            const SolutionBundle b = solve_hsde(p, tight);
            values = values && b.optimal();
            toy_kkt = std::max(toy_kkt, b.kkt.max());
            toy_res = std::max(toy_res, b.residual_norm);
            values = values && std::abs(b.solution.x(0) - (p.cones.size() == 1 ? 1.0 : 5.0)) <= 1e-7;
        }
        std::vector<ScenarioSet> sets = typical;
        sets.push_back(nominal_scenario(ieee33));
        for (const auto& s : sets) {
            const DispatchResult r = solve_dispatch(build_program(ieee33, s), settings);
            values = values && r.bundle.optimal();
            grid_kkt = std::max(grid_kkt, r.bundle.kkt.max());
            grid_res = std::max(grid_res, r.bundle.residual_norm);
        }
        const bool pass = values && toy_kkt <= 1e-7 && grid_kkt <= 1e-6 && toy_res <= 1e-7 && grid_res <= 1e-7;
        return std::pair{pass, fmt("toy KKT %.2e, 33-bus KKT %.2e, max ||N|| %.2e / %.2e", toy_kkt, grid_kkt, toy_res,
                                   grid_res)};
    });

    criterion(3, [&] {
        std::mt19937_64 rng(31);
        const ConeProgram prog = build_program(tutorial, tutorial_sets.at(0));
        std::vector<ConeProblem> problems{soc_toy(), lp_toy(), prog.problem};
        double skew = 0.0, adj = 0.0, dpi = 0.0;
        for (const auto& p : problems) {
            const SpMat Q = build_Q(p.A, p.b, p.c);
            skew = std::max(skew, Matrix(SpMat(Q + SpMat(Q.transpose()))).cwiseAbs().maxCoeff());
            const SolutionBundle sol = solve_hsde(p, settings);
            if (!sol.optimal()) return std::pair{false, std::string("solve failed")};
            const DerivativeContext ctx = DerivativeContext::make(p, sol);
            const Index n = p.A.cols(), m = p.A.rows();
            for (int k = 0; k < 50; ++k) {
                SpMat dA = p.A;
                std::normal_distribution<double> nd;
                for (Index col = 0; col < dA.outerSize(); ++col)
                    for (SpMat::InnerIterator it(dA, col); it; ++it) it.valueRef() = nd(rng);
                const Vec db = randn(rng, m), dc = randn(rng, n);
                const Vec gx = randn(rng, n), gy = randn(rng, m), gs = randn(rng, m);
                const SolutionDelta f = ctx.forward(dA, db, dc);
                const ParameterGradient g = ctx.adjoint(gx, gy, gs);
                const double lhs = gx.dot(f.dx) + gy.dot(f.dy) + gs.dot(f.ds);
                const double rhs = g.gA.cwiseProduct(dA).sum() + g.gb.dot(db) + g.gc.dot(dc);
                adj = std::max(adj, std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)}));
            }
        }
        const ConeList cones{{ConeKind::Zero, 2}, {ConeKind::Nonnegative, 3}, {ConeKind::SecondOrder, 4},
                             {ConeKind::SecondOrder, 3}};
        const Index dim = total_dim(cones);
        for (int trial = 0; trial < 30; ++trial) {
            const Vec v = randn(rng, dim);
            const Matrix J(dproject_dual(v, cones).matrix);
            const double h = 1e-6;
            for (Index j = 0; j < dim; ++j) {
                Vec vp = v, vm = v;
                vp(j) += h;
                vm(j) -= h;
                const Vec fd = (project_dual(vp, cones) - project_dual(vm, cones)) / (2 * h);
                dpi = std::max(dpi, (fd - J.col(j)).cwiseAbs().maxCoeff());
            }
        }
        return std::pair{skew == 0.0 && adj <= 1e-8 && dpi <= 1e-6,
                         fmt("max |Q + Q^T| = %.1e, adjoint identity rel. error %.2e, D Pi vs FD %.2e", skew, adj, dpi)};
    });

    criterion(4, [&] {
        const NetworkCase one = load_case(data("single_bus.json"));
        const DlmeRun r1 = compute_dlme(one, nominal_scenario(one), settings);
        const double dev_p = (r1.matrix.active.array() - 0.875).abs().maxCoeff();
        const double dev_q = r1.matrix.reactive.cwiseAbs().maxCoeff();

        const NetworkCase two = load_case(data("two_bus.json"));
        const ScenarioSet s2 = nominal_scenario(two);
        const DlmeRun r2 = compute_dlme(two, s2, settings);
        const FdOracle oracle(two, s2, settings);
        double min_far = 1e9, oracle_dev = 0.0;
        for (int t = 0; t < two.horizon; ++t) {
            const double v = r2.matrix.active(1, t);
            min_far = std::min(min_far, v);
            const double fd = oracle(1, t, DemandKind::Active, 1e-4).value;
            oracle_dev = std::max(oracle_dev, std::abs(v - fd) / std::max(1e-5, std::abs(fd)));
        }
        const bool pass = dev_p <= 1e-6 && dev_q <= 1e-6 && min_far > 0.875 && oracle_dev <= 1e-3;
        return std::pair{pass, fmt("single bus |DLME - 0.875| %.1e, |DLME_q| %.1e; two-bus min DLME %.6f, "
                                   "oracle rel. deviation %.1e",
                                   dev_p, dev_q, min_far, oracle_dev)};
    });

    criterion(5, [&] {
        double audit = 0.0, bound = 0.0;
        int checked = 0;
        auto check = [&](const NetworkCase& c, const ScenarioSet& s) {
            const DispatchResult r = solve_dispatch(build_program(c, s), settings);
            if (!r.bundle.optimal()) throw std::runtime_error("dispatch failed for " + c.name + "/" + s.label);
            const CefState cef = compute_cef(c, r.dispatch, EmissionModel::from_case(c));
            audit = std::max(audit, cef.audit_error);
            for (Index t = 0; t < cef.node.cols(); ++t)
                for (Index i = 0; i < cef.node.rows(); ++i)
                    bound = std::max({bound, cef.source_min(t) - cef.node(i, t), cef.node(i, t) - cef.source_max(t)});
            ++checked;
        };
        for (const char* name : {"single_bus", "two_bus", "tutorial6", "ieee33"}) {
            const NetworkCase c = load_case(data(std::string(name) + ".json"));
            check(c, nominal_scenario(c));
        }
        for (const auto& s : tutorial_sets) check(tutorial, s);
        for (const auto& s : typical) check(ieee33, s);
        const double mix = mix_intensity({{1.0, 0.875}, {1.0, 0.520}});
        return std::pair{audit <= 1e-6 && bound <= 1e-12 && std::abs(mix - 0.6975) <= 1e-12,
                         fmt("%.0f case/scenario runs, max balance error %.1e t, max bound excess %.1e, mix %.4f",
                             checked, audit, bound, mix)};
    });

    criterion(6, [&] {
        std::mt19937_64 rng(6);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::uniform_int_distribution<int> nb(1, 6);
        int mismatches = 0;
        for (int trial = 0; trial < 100; ++trial) {
            const int n = nb(rng);
            Matrix sig(n, 1), cap(n, 1);
            for (int i = 0; i < n; ++i) {
                sig(i, 0) = std::round(u(rng) * 4.0) / 4.0 - 0.25;
                cap(i, 0) = std::round(u(rng) * 8.0) / 4.0;
            }
            const Vec budget = Vec::Constant(1, u(rng) * cap.sum());
            const DrPlan p = allocate_dr(sig, budget, cap);
            const double greedy = sig.col(0).dot(p.response.col(0));
            const double best = vertex_optimum(sig.col(0), cap.col(0), budget(0));
            const bool feasible = std::abs(p.response.sum() - budget(0)) <= 1e-12 &&
                                  (p.response.array() >= 0).all() && (p.response.array() <= cap.array()).all();
            if (!feasible || std::abs(greedy - best) > 1e-10 * std::max(1.0, std::abs(best))) ++mismatches;
        }
        return std::pair{mismatches == 0, fmt("100 random instances, %.0f differ from vertex enumeration", mismatches)};
    });

    criterion(7, [&] {
        const double a = enhance_metric(30.987, 30.563, 30.781).value_or(NAN);
        const double b = enhance_metric(17.460, 17.106, 17.253).value_or(NAN);
        return std::pair{std::abs(a - 106.158) <= 2.0 && std::abs(b - 70.949) <= 2.0,
                         fmt("%.3f%% (expected 106.158%%), %.3f%% (expected 70.949%%)", a, b)};
    });

    criterion(8, [&] {
        const auto t0 = Clock::now();
        RunConfig cfg;
        std::string detail;
        bool pass = true;
        for (const auto& s : typical) {
            const ScenarioSignals sig = compute_signals(ieee33, s, cfg);
            const AlleviationReport rep = evaluate_dr(ieee33, s, sig, cfg);
            const double d = rep.post.at("dlme"), a = rep.post.at("dlae"), r = rep.post.at("rodm");
            const double slack = 1e-7 * rep.initial;
            pass = pass && d <= a + slack && d <= r + slack;
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s: %.4f / %.4f / %.4f t; ", s.label.c_str(), d, a, r);
            detail += buf;
        }
        const double secs = seconds_since(t0);
        return std::pair{pass && secs < 900.0, "post-DR dlme / dlae / rodm " + detail + fmt("%.1f s", secs)};
    });

    criterion(9, [&] {
        const fs::path root = fs::temp_directory_path() / "dlme_acceptance";
        fs::remove_all(root);
        for (const char* run : {"a", "b"}) {
            RunConfig cfg;
            cfg.case_path = data("tutorial6.json");
            cfg.scenario_path = data("tutorial6_scenarios.csv");
            cfg.out_dir = (root / run).string();
            cfg.plots = true;
            cmd_signals(cfg);
            cmd_dr(cfg);
            cfg.case_path = data("ieee33.json");
            cfg.scenario_path = data("ieee33_pool.csv");
            cmd_cluster(cfg);
        }
        int files = 0, differ = 0;
        for (const auto& e : fs::directory_iterator(root / "a")) {
            ++files;
            if (slurp(e.path()) != slurp(root / "b" / e.path().filename())) ++differ;
        }
        // the shipped typical scenarios are what the cluster command produces
        const bool shipped = slurp(root / "a" / "typical.csv") == slurp(data("ieee33_typical.csv"));
        fs::remove_all(root);
        return std::pair{files > 0 && differ == 0 && shipped,
                         fmt("%.0f files compared, %.0f differ", files, differ) +
                             (shipped ? ", shipped typical scenarios reproduced" : ", shipped typical scenarios differ")};
    });

    std::printf("%d of 9 criteria failed, %.1f s total\n", failures, seconds_since(t_all));
    return failures == 0 ? 0 : 1;
}
