#include "dlme/pipeline.hpp"

#include "dlme/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>

namespace dlme {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

void RunConfig::validate() const {
    if (case_path.empty()) fail(ErrorKind::Usage, "--case is required");
    if (!fs::exists(case_path)) fail(ErrorKind::Validation, "case file not found: " + case_path);
    if (!scenario_path.empty() && !fs::exists(scenario_path))
        fail(ErrorKind::Validation, "scenario file not found: " + scenario_path);
    for (const auto& s : signals)
        if (std::find(kSignalNames.begin(), kSignalNames.end(), s) == kSignalNames.end())
            fail(ErrorKind::Usage, "unknown signal '" + s + "' (expected dlme, dlme_q, dlae, rodm)");
    if (!(solver.tol > 0.0)) fail(ErrorKind::Usage, "--tol must be positive");
    if (solver.max_iters < 1) fail(ErrorKind::Usage, "--max-iters must be positive");
    if (!(budget_pct >= 0.0)) fail(ErrorKind::Usage, "--budget-pct must be non-negative");
    if (fd_check < 0) fail(ErrorKind::Usage, "--fd-check must be non-negative");
    if (!(fd_delta > 0.0)) fail(ErrorKind::Usage, "--fd-delta must be positive");
    if (clusters < 1) fail(ErrorKind::Usage, "--k must be at least 1");
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage: return 2;
        case ErrorKind::Parse: return 3;
        case ErrorKind::Validation: return 4;
        case ErrorKind::Solver: return 5;
        case ErrorKind::Infeasible: return 6;
        case ErrorKind::Numerical: return 7;
    }
    return 1;
}

const Eigen::MatrixXd& ScenarioSignals::matrix(const std::string& signal) const {
    if (signal == "dlme" && dlme) return dlme->active;
    if (signal == "dlme_q" && dlme) return dlme->reactive;
    if (signal == "dlae" && cef) return cef->node;
    if (signal == "rodm" && merit) return merit->rodm;
    fail(ErrorKind::Usage, "signal '" + signal + "' was not computed");
}

std::vector<ScenarioSet> load_scenarios(const NetworkCase& c, const RunConfig& cfg) {
    if (cfg.scenario_path.empty()) return {nominal_scenario(c)};
    return read_scenarios(cfg.scenario_path, c);
}

namespace {

NetworkCase load(const RunConfig& cfg) {
    cfg.validate();
    return load_case(cfg.case_path);
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
}

// scenario labels become file name parts
std::string file_label(const std::string& label) {
    std::string s = label;
    for (char& ch : s)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.')) ch = '_';
    return s;
}

void require_optimal(const DispatchResult& r, const std::string& label) {
    switch (r.bundle.status) {
        case SolveStatus::Optimal: return;
        case SolveStatus::Infeasible: fail(ErrorKind::Infeasible, label + ": dispatch is infeasible");
        default:
            fail(ErrorKind::Solver, label + ": dispatch did not solve (" + to_string(r.bundle.status) +
                                        "): " + r.bundle.message);
    }
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Index t = 0; t < m.cols(); ++t) r.push_back(m(i, t));
        rows.push_back(std::move(r));
    }
    return rows;
}

json summary_json(const HourSummary& s) {
    return json{{"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
}

json kkt_json(const DispatchResult& r) {
    const KktReport& k = r.bundle.kkt;
    return json{{"status", to_string(r.bundle.status)},
                {"objective", r.dispatch.objective},
                {"primal_residual", k.primal_residual},
                {"dual_residual", k.dual_residual},
                {"duality_gap", k.duality_gap},
                {"complementarity", k.complementarity},
                {"residual_norm", r.bundle.residual_norm},
                {"iterations", r.bundle.iterations},
                {"refine_steps", r.bundle.refine_steps},
                {"max_cone_gap", r.dispatch.max_cone_gap}};
}

const char* kind_name(DemandKind k) { return k == DemandKind::Active ? "active" : "reactive"; }

}  // namespace

ScenarioSignals compute_signals(const NetworkCase& c, const ScenarioSet& s, const RunConfig& cfg) {
    ScenarioSignals out;
    out.label = s.label;
    const EmissionModel model = EmissionModel::from_case(c);
    if (cfg.signals.count("dlme") || cfg.signals.count("dlme_q")) {
        DlmeRun run = compute_dlme(c, s, cfg.solver);
        out.emission = run.emission;
        out.dispatch = std::move(run.dispatch);
        out.dlme = std::move(run.matrix);
    } else {
        out.dispatch = solve_dispatch(build_program(c, s), cfg.solver);
        require_optimal(out.dispatch, s.label);
        out.emission = total_emission(out.dispatch.dispatch, c);
    }
    if (cfg.signals.count("dlae")) {
        out.cef = compute_cef(c, out.dispatch.dispatch, model);
        for (const auto& w : out.cef->warnings) std::cerr << "warning: " << s.label << ": " << w << "\n";
    }
    if (cfg.signals.count("rodm")) out.merit = compute_merit_order(c, s, model);
    return out;
}

std::vector<FdRecord> fd_audit(const NetworkCase& c, const std::vector<ScenarioSet>& scenarios,
                               const std::vector<ScenarioSignals>& signals, int count, double delta,
                               std::uint64_t seed, const SolverSettings& settings) {
    struct Entry {
        std::size_t scenario, bus;
        int hour;
        DemandKind kind;
    };
    std::vector<Entry> pool;
    for (std::size_t k = 0; k < signals.size(); ++k) {
        if (!signals[k].dlme) continue;
        const DlmeMatrix& d = *signals[k].dlme;
        for (Index i = 0; i < d.active.rows(); ++i)
            for (Index t = 0; t < d.active.cols(); ++t) {
                if (!d.kink_active(i, t))
                    pool.push_back({k, static_cast<std::size_t>(i), static_cast<int>(t), DemandKind::Active});
                if (!d.kink_reactive(i, t))
                    pool.push_back({k, static_cast<std::size_t>(i), static_cast<int>(t), DemandKind::Reactive});
            }
    }
    // partial Fisher-Yates with a fixed generator
    std::mt19937_64 rng(seed);
    const std::size_t n = std::min(pool.size(), static_cast<std::size_t>(std::max(count, 0)));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    std::stable_sort(pool.begin(), pool.end(), [](const Entry& a, const Entry& b) { return a.scenario < b.scenario; });

    std::vector<FdRecord> out;
    std::size_t current = static_cast<std::size_t>(-1);
    std::optional<FdOracle> oracle;
    for (const Entry& e : pool) {
        if (e.scenario != current) {
            oracle.emplace(c, scenarios[e.scenario], settings);
            current = e.scenario;
        }
        const DlmeMatrix& d = *signals[e.scenario].dlme;
        FdRecord r;
        r.scenario = signals[e.scenario].label;
        r.bus = c.buses[e.bus].id;
        r.hour = e.hour + 1;
        r.kind = e.kind;
        r.adjoint = e.kind == DemandKind::Active ? d.active(static_cast<Index>(e.bus), e.hour)
                                                 : d.reactive(static_cast<Index>(e.bus), e.hour);
        const FdEstimate est = (*oracle)(e.bus, e.hour, e.kind, delta);
        r.fd = est.value;
        r.one_sided = est.one_sided;
        r.pass = std::abs(r.adjoint - r.fd) <= std::max(1e-3 * std::abs(r.fd), 1e-5);
        out.push_back(r);
    }
    return out;
}

AlleviationReport evaluate_dr(const NetworkCase& c, const ScenarioSet& s, const ScenarioSignals& sig,
                              const RunConfig& cfg) {
    AlleviationReport rep;
    rep.scenario = s.label;
    rep.kind = cfg.reactive ? DemandKind::Reactive : DemandKind::Active;
    rep.initial = sig.emission;
    const Eigen::VectorXd budget = peak_budget(s, rep.kind, cfg.budget_pct);
    const double dt = c.options.delta_t;
    rep.budget = cfg.daily_budget ? budget.sum() * dt : budget.size() ? budget(0) : 0.0;
    const Eigen::MatrixXd& caps = cfg.reactive ? s.q_demand : s.p_demand;

    const std::string lead = cfg.reactive ? "dlme_q" : "dlme";
    std::vector<std::string> used{lead};
    if (!cfg.reactive)
        for (const char* b : {"dlae", "rodm"})
            if (cfg.signals.count(b)) used.emplace_back(b);
    for (const auto& name : used) {
        const BoolMatrix* mask = nullptr;
        if (cfg.exclude_kinks && sig.dlme && name == lead)
            mask = cfg.reactive ? &sig.dlme->kink_reactive : &sig.dlme->kink_active;
        DrPlan plan = cfg.daily_budget ? allocate_dr_daily(sig.matrix(name), rep.budget, caps, dt, mask)
                                       : allocate_dr(sig.matrix(name), budget, caps, mask);
        plan.signal = name;
        plan.kind = rep.kind;
        const Redispatch red = apply_and_redispatch(c, s, plan, cfg.solver, &sig.dispatch.bundle.z);
        rep.post[name] = red.emission;
    }
    for (std::size_t k = 1; k < used.size(); ++k)
        rep.enhance[used[k]] = enhance_metric(rep.initial, rep.post[lead], rep.post[used[k]]);
    return rep;
}

int cmd_solve(const RunConfig& cfg) {
    const NetworkCase c = load(cfg);
    const auto scenarios = load_scenarios(c, cfg);
    json summary{{"case", c.name}, {"scenarios", json::array()}};
    for (const auto& s : scenarios) {
        const ConeProgram prog = build_program(c, s);
        const std::string tag = file_label(s.label);
        if (cfg.dump_program) write_atomic(out_path(cfg, "program_" + tag + ".txt"), dump_program(prog));
        const DispatchResult r = solve_dispatch(prog, cfg.solver);
        require_optimal(r, s.label);
        write_atomic(out_path(cfg, "dispatch_" + tag + ".csv"), dispatch_csv(r.dispatch, c));
        json e{{"label", s.label},
               {"emission_t", total_emission(r.dispatch, c)},
               {"constraint_violation", constraint_violation(r.dispatch, c, s)},
               {"variables", prog.problem.A.cols()},
               {"constraints", prog.problem.A.rows()}};
        e["solver"] = kkt_json(r);
        summary["scenarios"].push_back(std::move(e));
    }
    write_atomic(out_path(cfg, "solve_summary.json"), summary.dump(2) + "\n");
    return 0;
}

int cmd_signals(const RunConfig& cfg) {
    const NetworkCase c = load(cfg);
    const auto scenarios = load_scenarios(c, cfg);
    std::vector<ScenarioSignals> all;
    json doc{{"case", c.name}, {"signals", json(std::vector<std::string>(cfg.signals.begin(), cfg.signals.end()))},
             {"bus_ids", json::array()}, {"scenarios", json::array()}};
    for (const auto& b : c.buses) doc["bus_ids"].push_back(b.id);
    for (const auto& s : scenarios) {
        ScenarioSignals sig = compute_signals(c, s, cfg);
        const std::string tag = file_label(s.label);
        json e{{"label", s.label}, {"emission_t", sig.emission}};
        e["solver"] = kkt_json(sig.dispatch);
        if (sig.dlme) {
            json flagged = json::array();
            for (Index i = 0; i < sig.dlme->active.rows(); ++i)
                for (Index t = 0; t < sig.dlme->active.cols(); ++t)
                    for (DemandKind k : {DemandKind::Active, DemandKind::Reactive}) {
                        const bool f = k == DemandKind::Active ? sig.dlme->kink_active(i, t) : sig.dlme->kink_reactive(i, t);
                        if (f) flagged.push_back({{"bus", c.buses[static_cast<std::size_t>(i)].id}, {"hour", t + 1}, {"kind", kind_name(k)}});
                    }
            e["approximate"] = sig.dlme->approximate;
            e["kink_rows"] = sig.dlme->kink_rows;
            e["flagged"] = std::move(flagged);
        }
        if (sig.cef) e["cef_audit_error_t"] = sig.cef->audit_error;
        json mats = json::object(), sums = json::object();
        for (const auto& name : kSignalNames) {
            if (!cfg.signals.count(name)) continue;
            const Eigen::MatrixXd& m = sig.matrix(name);
            write_atomic(out_path(cfg, name + "_" + tag + ".csv"), matrix_csv(m, c));
            const HourSummary hs = summarize(m);
            mats[name] = matrix_json(m);
            sums[name] = summary_json(hs);
            if (cfg.plots)
                write_atomic(out_path(cfg, name + "_" + tag + ".svg"),
                             summary_svg(hs, name + " / " + s.label, name == "dlme_q" ? "tCO2/MVArh" : "tCO2/MWh"));
        }
        e["matrices"] = std::move(mats);
        e["hourly_summary"] = std::move(sums);
        doc["scenarios"].push_back(std::move(e));
        all.push_back(std::move(sig));
    }
    write_atomic(out_path(cfg, "signals.json"), doc.dump(2) + "\n");

    if (cfg.fd_check > 0) {
        if (!cfg.signals.count("dlme") && !cfg.signals.count("dlme_q"))
            fail(ErrorKind::Usage, "--fd-check needs the dlme or dlme_q signal");
        const auto recs = fd_audit(c, scenarios, all, cfg.fd_check, cfg.fd_delta, cfg.seed, cfg.solver);
        json audit{{"delta_pu", cfg.fd_delta}, {"samples", recs.size()}, {"entries", json::array()}};
        double max_dev = 0.0;
        int failures = 0;
        for (const auto& r : recs) {
            max_dev = std::max(max_dev, std::abs(r.adjoint - r.fd));
            failures += r.pass ? 0 : 1;
            audit["entries"].push_back({{"scenario", r.scenario}, {"bus", r.bus}, {"hour", r.hour},
                                        {"kind", kind_name(r.kind)}, {"adjoint", r.adjoint}, {"fd", r.fd},
                                        {"one_sided", r.one_sided}, {"pass", r.pass}});
        }
        audit["max_abs_deviation"] = max_dev;
        audit["failures"] = failures;
        write_atomic(out_path(cfg, "fd_audit.json"), audit.dump(2) + "\n");
        std::cout << "fd check: " << recs.size() << " samples, " << failures << " outside tolerance, max deviation "
                  << fmt6(max_dev) << "\n";
    }
    return 0;
}

int cmd_dr(const RunConfig& cfg) {
    RunConfig run = cfg;
    run.signals.insert(cfg.reactive ? "dlme_q" : "dlme");
    const NetworkCase c = load(run);
    const auto scenarios = load_scenarios(c, run);
    json doc{{"case", c.name}, {"mode", cfg.reactive ? "reactive" : "active"}, {"budget_pct", cfg.budget_pct},
             {"budget_mode", cfg.daily_budget ? "daily" : "hourly"},
             {"exclude_kinks", cfg.exclude_kinks}, {"scenarios", json::array()}};
    const std::string lead = cfg.reactive ? "dlme_q" : "dlme";
    std::vector<std::string> cols{lead};
    if (!cfg.reactive)
        for (const char* b : {"dlae", "rodm"})
            if (run.signals.count(b)) cols.emplace_back(b);

    const std::string budget_key = cfg.daily_budget ? "budget_energy" : "budget_per_hour";
    std::string csv = "scenario,mode," + budget_key + ",initial_t";
    for (const auto& s : cols) csv += ",post_" + s + "_t";
    for (const auto& s : cols) csv += ",reduction_" + s + "_t";
    for (std::size_t k = 1; k < cols.size(); ++k) csv += ",enhance_vs_" + cols[k] + "_pct";
    csv += "\n";

    for (const auto& s : scenarios) {
        const ScenarioSignals sig = compute_signals(c, s, run);
        const AlleviationReport rep = evaluate_dr(c, s, sig, run);
        json e{{"label", rep.scenario}, {budget_key, rep.budget}, {"initial_t", rep.initial}};
        json post = json::object(), red = json::object(), enh = json::object();
        csv += rep.scenario + "," + kind_name(rep.kind) + "," + fmt6(rep.budget) + "," + fmt6(rep.initial);
        for (const auto& name : cols) {
            post[name] = rep.post.at(name);
            red[name] = rep.reduction(name);
            csv += "," + fmt6(rep.post.at(name));
        }
        for (const auto& name : cols) csv += "," + fmt6(rep.reduction(name));
        for (std::size_t k = 1; k < cols.size(); ++k) {
            const auto& v = rep.enhance.at(cols[k]);
            enh[cols[k]] = v ? json(*v) : json(nullptr);
            csv += "," + (v ? fmt6(*v) : std::string("undefined"));
        }
        csv += "\n";
        e["post_t"] = std::move(post);
        e["reduction_t"] = std::move(red);
        if (!cfg.reactive) e["enhance_pct"] = std::move(enh);
        doc["scenarios"].push_back(std::move(e));
    }
    write_atomic(out_path(cfg, "dr_report.json"), doc.dump(2) + "\n");
    write_atomic(out_path(cfg, "dr_report.csv"), csv);
    return 0;
}

int cmd_cluster(const RunConfig& cfg) {
    if (cfg.scenario_path.empty()) fail(ErrorKind::Usage, "cluster needs --scenarios (the pool)");
    const NetworkCase c = load(cfg);
    const auto pool = read_scenarios(cfg.scenario_path, c);
    const ClusterResult res = cluster_scenarios(pool, cfg.clusters, cfg.seed);
    write_atomic(out_path(cfg, "typical.csv"), scenarios_to_csv(res.centroids, c));
    json doc{{"k", cfg.clusters}, {"seed", cfg.seed}, {"sse", res.sse}, {"sizes", res.sizes}, {"members", json::object()}};
    for (std::size_t k = 0; k < res.centroids.size(); ++k) {
        json m = json::array();
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (res.assignment[i] == static_cast<int>(k)) m.push_back(pool[i].label);
        doc["members"][res.centroids[k].label] = std::move(m);
    }
    write_atomic(out_path(cfg, "cluster.json"), doc.dump(2) + "\n");
    return 0;
}

int cmd_audit(const RunConfig& cfg) {
    RunConfig run = cfg;
    run.signals = {"dlme", "dlme_q", "dlae", "rodm"};
    const NetworkCase c = load(run);
    const auto scenarios = load_scenarios(c, run);
    json doc{{"case", c.name}, {"scenarios", json::array()}};
    bool ok = true;
    std::vector<ScenarioSignals> all;
    for (const auto& s : scenarios) {
        ScenarioSignals sig = compute_signals(c, s, run);
        const double viol = constraint_violation(sig.dispatch.dispatch, c, s);
        double bound = 0.0;
        for (Index t = 0; t < sig.cef->node.cols(); ++t)
            for (Index i = 0; i < sig.cef->node.rows(); ++i)
                bound = std::max({bound, sig.cef->source_min(t) - sig.cef->node(i, t),
                                  sig.cef->node(i, t) - sig.cef->source_max(t)});
        const bool pass = sig.dispatch.bundle.kkt.max() <= cfg.solver.kkt_tol && viol <= 1e-6 &&
                          sig.cef->audit_error <= 1e-6 && bound <= 1e-9;
        ok = ok && pass;
        json e{{"label", s.label}, {"solver", kkt_json(sig.dispatch)}, {"constraint_violation", viol},
               {"cef_audit_error_t", sig.cef->audit_error}, {"cef_bound_violation", bound},
               {"dlme_flagged", sig.dlme->flagged()}, {"dlme_approximate", sig.dlme->approximate}, {"pass", pass}};
        doc["scenarios"].push_back(std::move(e));
        all.push_back(std::move(sig));
    }
    if (cfg.fd_check > 0) {
        const auto recs = fd_audit(c, scenarios, all, cfg.fd_check, cfg.fd_delta, cfg.seed, cfg.solver);
        int failures = 0;
        for (const auto& r : recs) failures += r.pass ? 0 : 1;
        doc["fd_samples"] = recs.size();
        doc["fd_failures"] = failures;
        ok = ok && failures == 0;
    }
    doc["pass"] = ok;
    write_atomic(out_path(cfg, "audit.json"), doc.dump(2) + "\n");
    std::cout << "audit " << (ok ? "passed" : "FAILED") << "\n";
    return ok ? 0 : 1;
}

}  // namespace dlme
