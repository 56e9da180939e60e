#pragma once

// Comparison signals: average nodal intensity from carbon emission flow
// tracing (DLAE) and a network-free merit-order marginal rate (RODM).

#include "dlme/emission.hpp"

#include <string>
#include <utility>
#include <vector>

namespace dlme {

/// Intensity of a mix of (MW, tCO2/MWh) inflows. Zero when the total is zero.
double mix_intensity(const std::vector<std::pair<double, double>>& inflows);

struct CefState {
    Eigen::MatrixXd node;         ///< bus x hour, tCO2/MWh (the DLAE matrix)
    Eigen::MatrixXd branch;       ///< branch x hour, intensity of the power carried
    Eigen::MatrixXd storage_dis;  ///< storage x hour, intensity of discharged energy
    // hourly audit, tCO2
    Eigen::VectorXd generation;   ///< sources incl. storage discharge
    Eigen::VectorXd load;         ///< demand, EV and storage charging
    Eigen::VectorXd loss;         ///< branch losses at the carried intensity
    Eigen::VectorXd source_min, source_max;  ///< intensity range of injecting sources
    double audit_error = 0.0;     ///< max_t |generation - load - loss|
    std::vector<std::string> warnings;
};

/// Proportional-sharing sweep in flow direction over the solved dispatch.
/// Storage discharge carries the intensity of the carbon charged into it
/// (starting from the substation rate) unless the unit fixes one.
CefState compute_cef(const NetworkCase& c, const DispatchSolution& sol, const EmissionModel& model);

inline Eigen::MatrixXd compute_dlae(const NetworkCase& c, const DispatchSolution& sol,
                                    const EmissionModel& model) {
    return compute_cef(c, sol, model).node;
}

struct MeritOrder {
    struct Unit {
        std::string name;
        double price = 0.0;
        double capacity = 0.0;  ///< MW
        double rate = 0.0;
    };
    std::vector<std::vector<Unit>> stack;  ///< per hour, ascending price
    std::vector<int> marginal;             ///< per hour, position in stack
    Eigen::MatrixXd rodm;                  ///< bus x hour
};

/// Stacks PV (at available output), synchronous DGs and substation import by
/// price against total demand each hour. At an exact capacity boundary the
/// next unit is marginal. Throws Validation when demand exceeds capacity.
MeritOrder compute_merit_order(const NetworkCase& c, const ScenarioSet& s, const EmissionModel& model);

inline Eigen::MatrixXd compute_rodm(const NetworkCase& c, const ScenarioSet& s, const EmissionModel& model) {
    return compute_merit_order(c, s, model).rodm;
}

}  // namespace dlme
