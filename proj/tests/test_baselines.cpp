#include "doctest.h"

#include "dlme/baselines.hpp"
#include "dlme/errors.hpp"
#include "test_data.hpp"

using namespace dlme;

namespace {

// A dispatch with every table shaped for the case and all values zero.
DispatchSolution blank_dispatch(const NetworkCase& c) {
    const int T = c.horizon;
    auto z = [&](std::size_t rows) { return Eigen::MatrixXd::Zero(static_cast<Index>(rows), T); };
    DispatchSolution d;
    d.status = SolveStatus::Optimal;
    d.p_sub = d.q_sub = Eigen::VectorXd::Zero(T);
    d.pv_p = d.pv_q = z(c.inverters.size());
    d.sg_p = d.sg_q = z(c.sync_dgs.size());
    d.st_cha = d.st_dis = d.st_e = z(c.storage.size());
    d.ev_p = z(c.evs.size());
    d.br_p = d.br_q = d.br_l = z(c.branches.size());
    d.v = Eigen::MatrixXd::Ones(static_cast<Index>(c.buses.size()), T);
    d.p_demand = d.q_demand = z(c.buses.size());
    return d;
}

// lossless two-bus feeder with a gas unit at the load bus
NetworkCase mixing_case() {
    NetworkCase c = testing::shipped("two_bus");
    c.branches[0].r = 0.0;
    SynchronousDG g;
    g.id = "gas";
    g.bus = 2;
    g.p_max = 2.0;
    g.q_min = -1.0;
    g.q_max = 1.0;
    g.ramp_down = -2.0;
    g.ramp_up = 2.0;
    g.emission_rate = 0.52;
    c.sync_dgs.push_back(g);
    validate(c);
    return c;
}

void check_cef_invariants(const CefState& cef) {
    CHECK(cef.audit_error <= 1e-6);
    for (Index t = 0; t < cef.node.cols(); ++t)
        for (Index i = 0; i < cef.node.rows(); ++i) {
            CHECK(cef.node(i, t) >= cef.source_min(t) - 1e-12);
            CHECK(cef.node(i, t) <= cef.source_max(t) + 1e-12);
        }
}

ScenarioSet with_total_demand(const NetworkCase& c, double mw) {
    ScenarioSet s = nominal_scenario(c);
    for (int t = 0; t < c.horizon; ++t) s.p_demand.col(t) *= mw / s.p_demand.col(t).sum();
    return s;
}

}  // namespace

TEST_CASE("mixing two sources") {
    CHECK(mix_intensity({{1.0, 0.875}, {1.0, 0.520}}) == doctest::Approx(0.6975).epsilon(1e-15));
    CHECK(mix_intensity({}) == 0.0);
    CHECK(mix_intensity({{0.0, 0.875}}) == 0.0);
    CHECK_THROWS_AS(mix_intensity({{-1.0, 0.5}}), Error);

    const NetworkCase c = mixing_case();
    DispatchSolution d = blank_dispatch(c);
    d.p_sub.setConstant(1.0);
    d.br_p.setConstant(1.0);
    d.sg_p.setConstant(1.0);
    d.p_demand.row(1).setConstant(2.0);
    const CefState cef = compute_cef(c, d, EmissionModel::from_case(c));
    for (int t = 0; t < 24; ++t) {
        CHECK(cef.node(1, t) == doctest::Approx(0.6975).epsilon(1e-15));
        CHECK(cef.node(0, t) == 0.875);
        CHECK(cef.branch(0, t) == 0.875);
    }
    check_cef_invariants(cef);
}

TEST_CASE("single source reaches every bus at its rate") {
    for (const char* name : {"single_bus", "two_bus"}) {
        const NetworkCase c = testing::shipped(name);
        const ScenarioSet s = nominal_scenario(c);
        const DispatchResult r = solve_dispatch(build_program(c, s), SolverSettings{});
        REQUIRE(r.bundle.optimal());
        const CefState cef = compute_cef(c, r.dispatch, EmissionModel::from_case(c));
        CHECK((cef.node.array() - 0.875).abs().maxCoeff() < 1e-15);
        check_cef_invariants(cef);
        CHECK(cef.warnings.empty());
    }
}

TEST_CASE("conservation on the shipped feeders") {
    const NetworkCase tut = testing::shipped("tutorial6");
    std::vector<std::pair<NetworkCase, ScenarioSet>> runs;
    for (const auto& s : read_scenarios(testing::data_path("tutorial6_scenarios.csv"), tut)) runs.emplace_back(tut, s);
    const NetworkCase big = testing::shipped("ieee33");
    runs.emplace_back(big, read_scenarios(testing::data_path("ieee33_typical.csv"), big).at(0));
    for (const auto& [c, s] : runs) {
        CAPTURE(s.label);
        const DispatchResult r = solve_dispatch(build_program(c, s), SolverSettings{});
        REQUIRE(r.bundle.optimal());
        const CefState cef = compute_cef(c, r.dispatch, EmissionModel::from_case(c));
        check_cef_invariants(cef);
        // generation side equals the marginal model's total emission when storage carries no rate
        double direct = 0.0;
        for (int t = 0; t < c.horizon; ++t)
            direct += cef.generation(t) - cef.storage_dis.col(t).dot(r.dispatch.st_dis.col(t)) * c.options.delta_t;
        CHECK(direct == doctest::Approx(total_emission(r.dispatch, c)).epsilon(1e-9));
        CHECK(cef.loss.minCoeff() >= 0.0);
    }
}

TEST_CASE("storage discharge intensity") {
    NetworkCase c = testing::shipped("tutorial6");
    const ScenarioSet s = nominal_scenario(c);
    const DispatchResult r = solve_dispatch(build_program(c, s), SolverSettings{});
    REQUIRE(r.bundle.optimal());
    const EmissionModel m = EmissionModel::from_case(c);
    // initial stored energy carries the import rate, delivered through the discharge efficiency
    const CefState tracked = compute_cef(c, r.dispatch, m);
    CHECK(tracked.storage_dis(0, 0) == doctest::Approx(0.875 / c.storage[0].eta_dis));
    c.storage[0].discharge_emission_rate = 0.3;
    const CefState fixed = compute_cef(c, r.dispatch, m);
    CHECK((fixed.storage_dis.array() == 0.3).all());
    check_cef_invariants(fixed);
}

TEST_CASE("load without injection is reported") {
    const NetworkCase c = testing::shipped("two_bus");
    DispatchSolution d = blank_dispatch(c);
    d.p_demand.row(1).setConstant(1.0);
    const CefState cef = compute_cef(c, d, EmissionModel::from_case(c));
    CHECK(cef.node.isZero());
    CHECK(cef.warnings.size() == 24u);
}

TEST_CASE("merit order marginal unit") {
    NetworkCase c = testing::shipped("tutorial6");
    for (double& p : c.substation.price_p) p = 100.0;  // PV (3 MW) < gas (1.5 MW) < import
    const EmissionModel m = EmissionModel::from_case(c);

    const MeritOrder below = compute_merit_order(c, with_total_demand(c, 2.0), m);
    CHECK(below.stack[0][0].name == "pv1");
    CHECK(below.rodm.isZero());
    CHECK(compute_rodm(c, with_total_demand(c, 4.0), m).isApproxToConstant(0.52));
    CHECK(compute_rodm(c, with_total_demand(c, 3.0), m).isApproxToConstant(0.52));   // boundary: next unit
    CHECK(compute_rodm(c, with_total_demand(c, 4.5), m).isApproxToConstant(0.875));  // boundary: next unit
    CHECK_THROWS_AS(compute_rodm(c, with_total_demand(c, 20.0), m), Error);

    // cheaper import moves gas to the top of the stack
    for (double& p : c.substation.price_p) p = 50.0;
    const MeritOrder mo = compute_merit_order(c, with_total_demand(c, 4.0), m);
    CHECK(mo.stack[0][1].name == "substation");
    CHECK(mo.rodm.isApproxToConstant(0.875));
    // spatially constant each hour
    for (int t = 0; t < 24; ++t) CHECK(mo.rodm.col(t).maxCoeff() == mo.rodm.col(t).minCoeff());
}
