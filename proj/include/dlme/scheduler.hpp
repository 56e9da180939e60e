#pragma once

// Multi-period branch-flow dispatch of a radial feeder as a cone program.
//
// Branches are oriented parent -> child from the substation; p, q of a branch
// are sending-end flows at the parent, l its squared current and v the
// squared bus voltage. Powers are in p.u. on the case MVA base inside the
// program and in MW / MVar everywhere else.

#include "dlme/grid.hpp"
#include "dlme/hsde.hpp"
#include "dlme/scenario.hpp"

#include <string>
#include <vector>

namespace dlme {

/// Column (or row) per entity and hour; -1 where the quantity is not modelled.
using IndexTable = std::vector<std::vector<Index>>;

struct VariableIndex {
    int horizon = 0;
    std::vector<Index> p_sub, q_sub;       ///< per hour
    IndexTable pv_p, pv_q;                 ///< inverter x hour
    IndexTable sg_p, sg_q;                 ///< synchronous DG x hour
    IndexTable st_cha, st_dis, st_e;       ///< storage x hour
    IndexTable ev_p;                       ///< EV aggregator x hour
    IndexTable br_p, br_q, br_l;           ///< branch (case order) x hour
    IndexTable v;                          ///< bus x hour
    IndexTable balance_p, balance_q;       ///< rows with b = -demand, bus x hour
    std::vector<int> parent;               ///< parent bus position, -1 at the root
    std::vector<int> feeder_branch;        ///< branch feeding each bus, -1 at the root
    std::vector<std::string> column_names;
};

struct ConeProgram {
    ConeProblem problem;
    VariableIndex index;
    std::vector<std::string> row_names;
    std::vector<int> row_hours;     ///< hour of each row (0-based)
    double objective_scale = 1.0;  ///< cost in currency = objective_scale * c^T x
    double base_mva = 1.0;
    double delta_t = 1.0;
};

/// Throws Validation on dimension mismatch or a bound with lower > upper.
ConeProgram build_program(const NetworkCase& c, const ScenarioSet& s);

/// Replace the demand entries of b (and nothing else) for another scenario
/// with the same structure.
void set_demand(ConeProgram& prog, const Eigen::MatrixXd& p_demand_mw, const Eigen::MatrixXd& q_demand_mvar);

struct DispatchSolution {
    SolveStatus status = SolveStatus::MaxIterations;
    double objective = 0.0;  ///< currency
    KktReport kkt;
    double residual_norm = 0.0;
    int iterations = 0;
    std::string message;
    // physical units, hour columns
    Eigen::VectorXd p_sub, q_sub;
    Eigen::MatrixXd pv_p, pv_q, sg_p, sg_q;
    Eigen::MatrixXd st_cha, st_dis, st_e;  ///< MW, MW, MWh
    Eigen::MatrixXd ev_p;
    Eigen::MatrixXd br_p, br_q;            ///< sending end, parent -> child, MW / MVar
    Eigen::MatrixXd br_l;                  ///< squared current, p.u.
    Eigen::MatrixXd v;                     ///< squared voltage, p.u.
    Eigen::MatrixXd p_demand, q_demand;    ///< demand the program was built with
    double max_cone_gap = 0.0;             ///< max over branches/hours of l v - p^2 - q^2 (p.u.)

    bool optimal() const { return status == SolveStatus::Optimal; }
};

/// Named values of a cone solution.
DispatchSolution extract_dispatch(const ConeProgram& prog, const SolutionBundle& bundle);

struct DispatchResult {
    DispatchSolution dispatch;
    SolutionBundle bundle;
};

/// Solves and extracts. Non-optimal statuses are returned, not thrown.
DispatchResult solve_dispatch(const ConeProgram& prog, const SolverSettings& settings,
                              const Vec* warm_start = nullptr);

/// Sum over hours of dt * (substation rate * import + synchronous DG rate *
/// output + storage rate * discharge), tCO2. The storage rate is the case
/// option, 0 by default.
double total_emission(const DispatchSolution& sol, const NetworkCase& c);

/// Largest violation of the dispatch constraints re-evaluated from named values
/// (p.u. for network rows, MW / MWh for device rows).
double constraint_violation(const DispatchSolution& sol, const NetworkCase& c, const ScenarioSet& s);

/// Sparse text export of (A, b, c, cones).
std::string dump_program(const ConeProgram& prog);

}  // namespace dlme
