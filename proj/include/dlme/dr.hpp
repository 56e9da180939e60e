#pragma once

// Budget-based demand response: allocate a per-hour response budget to the
// buses with the highest emission signal, re-dispatch, and score the result.

#include "dlme/emission.hpp"

#include <map>
#include <optional>
#include <string>

namespace dlme {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct DrPlan {
    std::string signal;
    DemandKind kind = DemandKind::Active;
    Eigen::MatrixXd response;  ///< bus x hour, MW (MVar for reactive plans)
    Eigen::VectorXd budget;    ///< per hour
    Eigen::MatrixXd caps;      ///< bus x hour
};

/// Greedy fill in descending signal order up to the caps, per hour; ties go to
/// the lower bus index. Entries marked in `deprioritize` are used only after
/// every unmarked entry of that hour is exhausted. Throws Validation when a
/// budget exceeds the sum of caps or any input is negative or misshaped.
DrPlan allocate_dr(const Eigen::MatrixXd& signal, const Eigen::VectorXd& budget, const Eigen::MatrixXd& caps,
                   const BoolMatrix* deprioritize = nullptr);

/// One energy budget (MWh or MVArh) shared by the whole horizon: the greedy
/// fill runs over every (bus, hour) entry at once, ties going to the earlier
/// hour and then the lower bus index. Caps are per-hour rates as above.
/// plan.budget holds the resulting per-hour totals.
DrPlan allocate_dr_daily(const Eigen::MatrixXd& signal, double energy, const Eigen::MatrixXd& caps,
                         double delta_t, const BoolMatrix* deprioritize = nullptr);

/// 1 % (or `pct`) of the peak hourly total demand, the same for every hour.
Eigen::VectorXd peak_budget(const ScenarioSet& s, DemandKind kind, double pct);

struct Redispatch {
    DispatchResult result;
    double emission = 0.0;
};

/// Re-solves with demand reduced by the plan. Throws Validation if any reduced
/// demand is negative and Infeasible / Solver when the re-dispatch fails.
Redispatch apply_and_redispatch(const NetworkCase& c, const ScenarioSet& s, const DrPlan& plan,
                                const SolverSettings& settings, const Vec* warm_start = nullptr);

/// (initial - post_dlme) / (initial - post_baseline) - 1, in percent;
/// std::nullopt when the baseline achieves no reduction.
std::optional<double> enhance_metric(double initial, double post_dlme, double post_baseline);

struct AlleviationReport {
    std::string scenario;
    DemandKind kind = DemandKind::Active;
    double budget = 0.0;                  ///< per hour, or MWh (MVArh) for a daily budget
    double initial = 0.0;                 ///< tCO2
    std::map<std::string, double> post;   ///< by signal name
    std::map<std::string, std::optional<double>> enhance;  ///< dlme over each baseline, percent

    double reduction(const std::string& signal) const { return initial - post.at(signal); }
};

}  // namespace dlme
