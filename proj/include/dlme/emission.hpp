#pragma once

// Marginal emission signals: gradients of total emission with respect to
// nodal demand, from one solve plus one adjoint pass through the solution map.

#include "dlme/diff.hpp"
#include "dlme/scheduler.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dlme {

/// Linear emission model: every source emits rate * energy.
struct EmissionModel {
    double substation_rate = 0.0;     ///< tCO2/MWh
    std::vector<double> sync_rates;   ///< per synchronous DG
    double storage_rate = 0.0;        ///< per MWh discharged
    double delta_t = 1.0;             ///< h

    static EmissionModel from_case(const NetworkCase& c);
};

/// d e_sum / d x for the program's variables (tCO2 per p.u. of each column).
Vec emission_gradient(const EmissionModel& model, const ConeProgram& prog);

struct DlmeMatrix {
    std::string scenario;
    Eigen::MatrixXd active;    ///< bus x hour, tCO2/MWh
    Eigen::MatrixXd reactive;  ///< bus x hour, tCO2/MVArh
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> kink_active, kink_reactive;
    std::vector<std::string> kink_rows;  ///< names of the program rows sitting at a kink
    bool approximate = false;            ///< singular linearization, least-squares gradients

    Index flagged() const { return kink_active.count() + kink_reactive.count(); }
};

struct DlmeRun {
    DlmeMatrix matrix;
    ConeProgram program;
    DispatchResult dispatch;
    double emission = 0.0;  ///< tCO2 over the horizon
};

/// Solves the dispatch and differentiates total emission through it.
/// Throws Infeasible / Solver when the dispatch does not solve to optimality.
DlmeRun compute_dlme(const NetworkCase& c, const ScenarioSet& s, const SolverSettings& settings);

/// Same, reusing a program and a solved dispatch.
DlmeMatrix compute_dlme(const NetworkCase& c, const ConeProgram& prog, const DispatchResult& sol,
                        const std::string& label, double kink_tol = kDefaultKinkTol);

enum class DemandKind { Active, Reactive };

struct FdEstimate {
    double value = 0.0;
    bool one_sided = false;  ///< one perturbed problem failed to solve
};

/// Central finite difference of total emission in one demand entry, by two
/// full re-solves of the perturbed program. delta is in p.u.; the result is
/// per MWh (or MVArh). Re-solves are warm-started and polished to a tight
/// residual so the difference quotient is not dominated by solver noise.
class FdOracle {
public:
    FdOracle(const NetworkCase& c, const ScenarioSet& s, const SolverSettings& settings);

    FdEstimate operator()(std::size_t bus, int hour, DemandKind which, double delta) const;
    double base_emission() const { return base_emission_; }

private:
    std::optional<double> emission_at(Index row, double shift) const;

    const NetworkCase& case_;
    SolverSettings settings_;
    ConeProgram prog_;
    Vec z0_;
    double base_emission_ = 0.0;
};

FdEstimate fd_oracle(const NetworkCase& c, const ScenarioSet& s, std::size_t bus, int hour,
                     DemandKind which, double delta, const SolverSettings& settings);

}  // namespace dlme
