// dlme: dispatch, emission signals and demand-response evaluation for radial feeders.

#include "dlme/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    dlme::RunConfig cfg;
    std::string signals = "dlme,dlme_q,dlae,rodm";

    CLI::App app{"Marginal emission signals for radial distribution networks"};
    app.require_subcommand(1, 1);
    auto global = [&](CLI::App* cmd) {
        cmd->add_option("--case", cfg.case_path, "network case (JSON)")->required();
        cmd->add_option("--scenarios", cfg.scenario_path, "scenario CSV; the case's nominal profile if omitted");
        cmd->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
        cmd->add_option("--seed", cfg.seed, "seed for sampling and clustering")->capture_default_str();
        cmd->add_option("--tol", cfg.solver.tol, "solver residual tolerance")->capture_default_str();
        cmd->add_option("--max-iters", cfg.solver.max_iters, "solver iteration limit")->capture_default_str();
        cmd->add_option("--signals", signals, "comma-separated subset of dlme,dlme_q,dlae,rodm")->capture_default_str();
        cmd->add_option("--budget-pct", cfg.budget_pct, "DR budget, percent of peak hourly demand")->capture_default_str();
        cmd->add_flag("--daily-budget", cfg.daily_budget, "one energy budget for the day instead of one per hour");
        cmd->add_flag("--reactive", cfg.reactive, "DR on reactive demand with the dlme_q signal");
        cmd->add_option("--fd-check", cfg.fd_check, "number of finite-difference spot checks")->capture_default_str();
        cmd->add_option("--fd-delta", cfg.fd_delta, "finite-difference step, p.u.")->capture_default_str();
        cmd->add_flag("--exclude-kinks,!--keep-kinks", cfg.exclude_kinks,
                      "DR uses kink-flagged DLME entries last (default on)");
        cmd->add_flag("--plots", cfg.plots, "write SVG hourly summaries");
        cmd->add_flag("--dump-program", cfg.dump_program, "write the cone program in text form");
        cmd->add_option("--k", cfg.clusters, "number of typical scenarios")->capture_default_str();
        cmd->add_flag("--verbose", cfg.solver.verbose, "solver progress on stderr");
    };
    CLI::App* solve = app.add_subcommand("solve", "solve the dispatch and write dispatch tables");
    CLI::App* sig = app.add_subcommand("signals", "compute emission signal matrices");
    CLI::App* dr = app.add_subcommand("dr", "evaluate budget-based demand response per signal");
    CLI::App* cluster = app.add_subcommand("cluster", "reduce a scenario pool to typical scenarios");
    CLI::App* audit = app.add_subcommand("audit", "solver, conservation and gradient checks");
    for (CLI::App* c : {solve, sig, dr, cluster, audit}) global(c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : dlme::exit_code(dlme::ErrorKind::Usage);
    }

    cfg.signals.clear();
    std::size_t pos = 0;
    while (pos <= signals.size()) {
        const std::size_t next = std::min(signals.find(',', pos), signals.size());
        const std::string s = signals.substr(pos, next - pos);
        if (!s.empty()) cfg.signals.insert(s);
        pos = next + 1;
    }

    try {
        if (*solve) return dlme::cmd_solve(cfg);
        if (*sig) return dlme::cmd_signals(cfg);
        if (*dr) return dlme::cmd_dr(cfg);
        if (*cluster) return dlme::cmd_cluster(cfg);
        return dlme::cmd_audit(cfg);
    } catch (const dlme::Error& e) {
        std::cerr << "error (" << dlme::to_string(e.kind()) << "): " << e.what() << "\n";
        return dlme::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
