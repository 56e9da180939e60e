#pragma once

// Batch commands behind the CLI. Each command reads a case (and optional
// scenario file), runs the engines and writes its artifacts under out_dir.
// Outputs depend only on the inputs, seed and settings.

#include "dlme/baselines.hpp"
#include "dlme/dr.hpp"
#include "dlme/errors.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dlme {

inline const std::vector<std::string> kSignalNames = {"dlme", "dlme_q", "dlae", "rodm"};

struct RunConfig {
    std::string case_path;
    std::string scenario_path;  ///< empty: the case's nominal profile
    std::string out_dir = "out";
    std::uint64_t seed = 2023;
    SolverSettings solver;
    std::set<std::string> signals{"dlme", "dlme_q", "dlae", "rodm"};
    double budget_pct = 1.0;    ///< of peak hourly demand
    bool daily_budget = false;  ///< pool the hourly budgets into one energy budget for the day
    bool reactive = false;      ///< DR on reactive demand with the dlme_q signal
    int fd_check = 0;           ///< number of sampled oracle comparisons
    double fd_delta = 1e-4;     ///< p.u.
    bool exclude_kinks = true;  ///< deprioritize kink-flagged DLME entries in DR
    bool plots = false;
    bool dump_program = false;
    int clusters = 4;

    /// Throws Usage on unknown signals or non-positive settings, Validation on
    /// missing input files.
    void validate() const;
};

struct ScenarioSignals {
    std::string label;
    double emission = 0.0;
    DispatchResult dispatch;
    std::optional<DlmeMatrix> dlme;  ///< holds dlme and dlme_q
    std::optional<CefState> cef;
    std::optional<MeritOrder> merit;

    /// Matrix of one of kSignalNames; throws Usage when not computed.
    const Eigen::MatrixXd& matrix(const std::string& signal) const;
};

struct FdRecord {
    std::string scenario;
    int bus = 0;  ///< bus id
    int hour = 0; ///< 1-based
    DemandKind kind = DemandKind::Active;
    double adjoint = 0.0, fd = 0.0;
    bool one_sided = false;
    bool pass = false;
};

/// Computes the selected signals for one scenario.
ScenarioSignals compute_signals(const NetworkCase& c, const ScenarioSet& s, const RunConfig& cfg);

/// Samples `count` distinct unflagged entries (seeded) over the scenarios and
/// compares each against the finite-difference oracle.
std::vector<FdRecord> fd_audit(const NetworkCase& c, const std::vector<ScenarioSet>& scenarios,
                               const std::vector<ScenarioSignals>& signals, int count, double delta,
                               std::uint64_t seed, const SolverSettings& settings);

/// DR evaluation of one scenario against every computed baseline.
AlleviationReport evaluate_dr(const NetworkCase& c, const ScenarioSet& s, const ScenarioSignals& sig,
                              const RunConfig& cfg);

std::vector<ScenarioSet> load_scenarios(const NetworkCase& c, const RunConfig& cfg);

// Commands. Each returns the process exit status on success (0) and throws
// dlme::Error otherwise.
int cmd_solve(const RunConfig& cfg);
int cmd_signals(const RunConfig& cfg);
int cmd_dr(const RunConfig& cfg);
int cmd_cluster(const RunConfig& cfg);
int cmd_audit(const RunConfig& cfg);

/// Exit status for an error kind: parse 3, validation 4, solver 5,
/// infeasible 6, numerical 7, usage 2.
int exit_code(ErrorKind kind);

}  // namespace dlme
