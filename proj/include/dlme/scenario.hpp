#pragma once

// Hourly load and PV time series for one day, and typical-day reduction.

#include "dlme/grid.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace dlme {

struct ScenarioSet {
    std::string label;
    Eigen::MatrixXd p_demand;         ///< bus x hour, MW (bus order of the case)
    Eigen::MatrixXd q_demand;         ///< bus x hour, MVar
    Eigen::MatrixXd pv_availability;  ///< inverter x hour, in [0, 1]

    int horizon() const { return static_cast<int>(p_demand.cols()); }
    bool operator==(const ScenarioSet& o) const {
        return label == o.label && p_demand == o.p_demand && q_demand == o.q_demand &&
               pv_availability == o.pv_availability;
    }
};

/// Nominal bus demands in every hour, PV fully available.
ScenarioSet nominal_scenario(const NetworkCase& c, const std::string& label = "nominal");

/// Dimensions against the case, demands >= 0, availability in [0, 1].
void validate(const ScenarioSet& s, const NetworkCase& c);

/// CSV with header scenario,entity_id,hour,p_mw,q_mvar,availability.
/// entity_id is "bus:<id>" (p_mw, q_mvar) or "pv:<inverter id>" (availability);
/// hours are 1-based. Every bus and inverter needs one row per hour. Scenarios
/// are returned in order of first appearance.
std::vector<ScenarioSet> read_scenarios(const std::string& path, const NetworkCase& c);
std::vector<ScenarioSet> parse_scenarios(const std::string& csv, const NetworkCase& c);
std::string scenarios_to_csv(const std::vector<ScenarioSet>& sets, const NetworkCase& c);

struct ClusterResult {
    std::vector<ScenarioSet> centroids;  ///< member means, labelled typical-1..k
    std::vector<int> assignment;         ///< centroid index of each pool member
    std::vector<int> sizes;
    double sse = 0.0;                    ///< in z-scored feature space
};

/// k-means++ on z-scored concatenated (p, q, availability) profiles. Several
/// seeded restarts plus a warm start from the k-1 solution keep the SSE
/// non-increasing in k. Deterministic for a given seed.
ClusterResult cluster_scenarios(const std::vector<ScenarioSet>& pool, int k, std::uint64_t seed);

}  // namespace dlme
