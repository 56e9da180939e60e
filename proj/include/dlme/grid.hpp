#pragma once

// Static description of a radial distribution feeder and its DER fleet.
//
// Units as stored: impedances, voltage and current bounds in p.u. on the
// case base; powers in MW / MVar, energies in MWh, prices per MWh (MVarh),
// emission rates in tCO2/MWh. The scheduler converts powers to p.u.

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dlme {

struct CaseBase {
    double mva = 10.0;
    double kv = 12.66;
    bool operator==(const CaseBase&) const = default;
};

struct Bus {
    int id = 0;
    double v_min = 0.95;
    double v_max = 1.05;
    double p_demand = 0.0;  ///< nominal (peak) demand, MW
    double q_demand = 0.0;  ///< nominal (peak) demand, MVar
    bool is_substation = false;
    bool operator==(const Bus&) const = default;
};

struct Branch {
    int from_bus = 0;
    int to_bus = 0;
    double r = 0.0;
    double x = 0.0;
    double i_max = 1.0;
    double i_min = 0.0;
    bool closed = true;
    bool operator==(const Branch&) const = default;
};

struct InverterDG {
    std::string id;
    int bus = 0;
    double capacity = 0.0;      ///< MW; hourly upper bound is capacity * availability
    double p_min = 0.0;         ///< MW
    double kappa_min = 1.0;     ///< minimum power factor
    double price_p = 0.0;
    std::optional<double> price_q;  ///< defaults to the substation reactive price
    bool operator==(const InverterDG&) const = default;
};

struct SynchronousDG {
    std::string id;
    int bus = 0;
    double p_min = 0.0;
    double p_max = 0.0;
    double q_min = 0.0;
    double q_max = 0.0;
    double ramp_down = 0.0;  ///< signed, <= ramp_up (MW/h)
    double ramp_up = 0.0;
    std::optional<double> p_initial;  ///< output before hour 1; default mid-range
    double emission_rate = 0.0;
    double price_p = 0.0;
    std::optional<double> price_q;
    bool operator==(const SynchronousDG&) const = default;

    double initial_output() const { return p_initial.value_or(0.5 * (p_min + p_max)); }
};

struct EnergyStorage {
    std::string id;
    int bus = 0;
    double p_cha_max = 0.0;
    double p_dis_max = 0.0;
    double e_min = 0.0;
    double e_max = 0.0;
    double e_init = 0.0;
    double eta_cha = 1.0;
    double eta_dis = 1.0;
    std::optional<double> discharge_emission_rate;  ///< fixed CEF intensity; tracked when absent
    double price = 0.0;  ///< cost per MWh charged or discharged
    bool operator==(const EnergyStorage&) const = default;
};

struct EvAggregator {
    std::string id;
    int bus = 0;
    std::vector<double> p_lb, p_ub;  ///< MW per hour
    std::vector<double> e_lb, e_ub;  ///< cumulative MWh through each hour
    bool operator==(const EvAggregator&) const = default;
};

struct Substation {
    int bus = 0;
    std::vector<double> price_p;  ///< per hour
    std::vector<double> price_q;  ///< per hour; defaults to 0.1 * price_p
    double emission_rate = 0.875;
    double p_min = 0.0;
    double p_max = 1e3;
    double q_max = 1e3;
    std::optional<double> v_set;  ///< fixed voltage magnitude (p.u.); bounds of the bus otherwise
    bool operator==(const Substation&) const = default;
};

enum class ReactiveCost { Signed, Magnitude };

struct CaseOptions {
    double delta_t = 1.0;                 ///< hours per period
    bool terminal_storage = true;         ///< e_T >= e_init
    ReactiveCost reactive_cost = ReactiveCost::Signed;
    double storage_emission_rate = 0.0;   ///< marginal-model rate for discharge
    bool operator==(const CaseOptions&) const = default;
};

struct NetworkCase {
    std::string name;
    CaseBase base;
    int horizon = 24;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<InverterDG> inverters;
    std::vector<SynchronousDG> sync_dgs;
    std::vector<EnergyStorage> storage;
    std::vector<EvAggregator> evs;
    Substation substation;
    std::map<std::string, double> emission_rates;  ///< named rates, e.g. coal, gas
    CaseOptions options;
    std::vector<std::string> assumptions;

    bool operator==(const NetworkCase&) const = default;

    /// Position of a bus id in `buses`; throws Validation when unknown.
    std::size_t bus_index(int id) const;
    std::size_t substation_index() const;
    std::vector<std::size_t> closed_branches() const;
};

/// Checks every invariant (bounds, efficiencies, radial topology...). Throws
/// Validation naming the violated invariant.
void validate(const NetworkCase& c);

/// Parses and validates a case file. Throws Parse or Validation.
NetworkCase load_case(const std::string& path);
NetworkCase parse_case(const std::string& json_text);
std::string case_to_json(const NetworkCase& c);

/// Parent of each bus in the closed-branch tree rooted at the substation
/// (-1 for the root), as bus positions, plus the branch feeding each bus.
struct Tree {
    std::vector<int> parent;
    std::vector<int> feeder_branch;  ///< index into NetworkCase::branches
    std::vector<std::size_t> order;  ///< depth-first order from the root
};

Tree radial_tree(const NetworkCase& c);

}  // namespace dlme
