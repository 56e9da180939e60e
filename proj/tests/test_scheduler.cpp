#include "doctest.h"

#include "dlme/errors.hpp"
#include "dlme/scheduler.hpp"
#include "test_data.hpp"

#include <cmath>

using namespace dlme;

namespace {

DispatchResult solve_case(const NetworkCase& c, const ScenarioSet& s) {
    const ConeProgram prog = build_program(c, s);
    DispatchResult r = solve_dispatch(prog, SolverSettings{});
    REQUIRE(r.bundle.optimal());
    return r;
}

}  // namespace

TEST_CASE("single bus: import equals demand") {
    const NetworkCase c = testing::shipped("single_bus");
    const ScenarioSet s = nominal_scenario(c);
    const DispatchResult r = solve_case(c, s);
    const DispatchSolution& d = r.dispatch;
    double cost = 0.0;
    for (int t = 0; t < 24; ++t) {
        CHECK(d.p_sub(t) == doctest::Approx(5.0).epsilon(1e-9));
        CHECK(d.q_sub(t) == doctest::Approx(2.0).epsilon(1e-9));
        cost += c.substation.price_p[static_cast<std::size_t>(t)] * 5.0 + c.substation.price_q[static_cast<std::size_t>(t)] * 2.0;
    }
    CHECK(d.objective == doctest::Approx(cost).epsilon(1e-8));
    CHECK(total_emission(d, c) == doctest::Approx(0.875 * 5.0 * 24.0).epsilon(1e-10));
    CHECK(r.bundle.kkt.max() <= 1e-7);
}

TEST_CASE("two bus: dispatch matches the exact branch power flow") {
    const NetworkCase c = testing::shipped("two_bus");
    const DispatchResult r = solve_case(c, nominal_scenario(c));
    // fixed point of l = (p^2 + q^2) / v1 with p = P + r l, q = Q + x l
    const double S = c.base.mva, rr = c.branches[0].r, xx = c.branches[0].x;
    const double P = 4.0 / S, Q = 1.5 / S, v1 = 1.0;
    double l = 0.0;
    for (int k = 0; k < 200; ++k) l = (std::pow(P + rr * l, 2) + std::pow(Q + xx * l, 2)) / v1;
    const double p = P + rr * l, q = Q + xx * l;
    const double v2 = v1 - 2.0 * (rr * p + xx * q) + (rr * rr + xx * xx) * l;
    const DispatchSolution& d = r.dispatch;
    for (int t = 0; t < 24; t += 7) {
        CHECK(d.p_sub(t) == doctest::Approx(p * S).epsilon(1e-7));
        CHECK(d.q_sub(t) == doctest::Approx(q * S).epsilon(1e-7));
        CHECK(d.br_l(0, t) == doctest::Approx(l).epsilon(1e-6));
        CHECK(d.v(1, t) == doctest::Approx(v2).epsilon(1e-8));
    }
    CHECK(d.max_cone_gap < 1e-7);
}

TEST_CASE("shipped dispatches satisfy their constraints") {
    for (const char* name : {"tutorial6", "ieee33"}) {
        CAPTURE(name);
        const NetworkCase c = testing::shipped(name);
        const ScenarioSet s = nominal_scenario(c);
        const DispatchResult r = solve_case(c, s);
        CHECK(r.bundle.kkt.max() <= 1e-6);
        CHECK(r.bundle.residual_norm <= 1e-7);
        CHECK(constraint_violation(r.dispatch, c, s) <= 1e-6);
        CHECK(r.dispatch.max_cone_gap <= 1e-5);
        // storage state follows its charge/discharge
        const auto& st = c.storage.at(0);
        double e = st.e_init;
        for (int t = 0; t < 24; ++t) {
            e += st.eta_cha * r.dispatch.st_cha(0, t) - r.dispatch.st_dis(0, t) / st.eta_dis;
            CHECK(r.dispatch.st_e(0, t) == doctest::Approx(e).epsilon(1e-6));
        }
        CHECK(r.dispatch.st_e(0, 23) >= st.e_init - 1e-7);
        CHECK(r.dispatch.ev_p.row(0).sum() == doctest::Approx(c.evs[0].e_lb.back()).epsilon(1e-6));
    }
}

TEST_CASE("infeasible demand is reported, not thrown") {
    const NetworkCase c = testing::shipped("single_bus");
    ScenarioSet s = nominal_scenario(c);
    s.p_demand(0, 3) = 25.0;  // above the 20 MW import limit
    const DispatchResult r = solve_dispatch(build_program(c, s), SolverSettings{});
    CHECK(r.bundle.status == SolveStatus::Infeasible);
    CHECK_FALSE(r.dispatch.optimal());
}

TEST_CASE("set_demand rewrites only the balance rows") {
    const NetworkCase c = testing::shipped("tutorial6");
    const auto sets = read_scenarios(testing::data_path("tutorial6_scenarios.csv"), c);
    ConeProgram a = build_program(c, sets[0]);
    ScenarioSet swapped = sets[0];
    swapped.p_demand = sets[1].p_demand;
    swapped.q_demand = sets[1].q_demand;
    const ConeProgram b = build_program(c, swapped);
    set_demand(a, sets[1].p_demand, sets[1].q_demand);
    REQUIRE(a.problem.b.size() == b.problem.b.size());
    CHECK((a.problem.b - b.problem.b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.problem.A - b.problem.A).norm() == 0.0);
    for (std::size_t i = 0; i < c.buses.size(); ++i)
        for (int t = 0; t < 24; ++t)
            CHECK(a.problem.b(a.index.balance_p[i][static_cast<std::size_t>(t)]) ==
                  doctest::Approx(-sets[1].p_demand(static_cast<Index>(i), t) / c.base.mva));
    CHECK_THROWS_AS(set_demand(a, Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)), Error);
}

TEST_CASE("row and column bookkeeping") {
    const NetworkCase c = testing::shipped("tutorial6");
    const ConeProgram prog = build_program(c, nominal_scenario(c));
    const Index m = prog.problem.A.rows(), n = prog.problem.A.cols();
    CHECK(static_cast<Index>(prog.row_names.size()) == m);
    CHECK(static_cast<Index>(prog.row_hours.size()) == m);
    CHECK(static_cast<Index>(prog.index.column_names.size()) == n);
    for (std::size_t i = 0; i < c.buses.size(); ++i)
        for (int t = 0; t < 24; ++t)
            CHECK(prog.row_hours[static_cast<std::size_t>(prog.index.balance_p[i][static_cast<std::size_t>(t)])] == t);
    CHECK(prog.problem.c.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("inconsistent bounds name the constraint") {
    NetworkCase c = testing::shipped("tutorial6");
    c.inverters[0].p_min = 0.5;
    ScenarioSet s = nominal_scenario(c);
    s.pv_availability(0, 10) = 0.1;  // 0.3 MW available < p_min
    try {
        build_program(c, s);
        FAIL("expected a validation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Validation);
        CHECK(std::string(e.what()).find("pv1") != std::string::npos);
    }
}

TEST_CASE("reactive cost by magnitude") {
    NetworkCase c = testing::shipped("tutorial6");
    c.options.reactive_cost = ReactiveCost::Magnitude;
    const ScenarioSet s = nominal_scenario(c);
    const DispatchResult r = solve_case(c, s);
    CHECK(constraint_violation(r.dispatch, c, s) <= 1e-6);
    CHECK(r.bundle.kkt.max() <= 1e-6);
}

TEST_CASE("program text export") {
    const NetworkCase c = testing::shipped("two_bus");
    const ConeProgram prog = build_program(c, nominal_scenario(c));
    const std::string text = dump_program(prog);
    CHECK(text.rfind("# cone program", 0) == 0);
    CHECK(text.find("\nn " + std::to_string(prog.problem.A.cols()) + "\n") != std::string::npos);
    CHECK(text.find("\nm " + std::to_string(prog.problem.A.rows()) + "\n") != std::string::npos);
    CHECK(text.find("\nA " + std::to_string(prog.problem.A.nonZeros()) + "\n") != std::string::npos);
    CHECK(dump_program(build_program(c, nominal_scenario(c))) == text);
}
