#include "doctest.h"

#include "dlme/cone.hpp"
#include "dlme/errors.hpp"
#include "test_problems.hpp"

#include <random>

using namespace dlme;
using dlme::testing::Matrix;

namespace {

Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

ConeList mixed_cones() {
    return {{ConeKind::Zero, 2}, {ConeKind::Nonnegative, 3}, {ConeKind::SecondOrder, 4},
            {ConeKind::SecondOrder, 2}, {ConeKind::Nonnegative, 1}};
}

// Brute-force nearest point of the 3-d second-order cone on a grid.
Vec grid_nearest_soc(const Vec& target, double h) {
    Vec best(3);
    double best_d = 1e300;
    for (double t = 0.0; t <= 2.0 + 1e-12; t += h)
        for (double a = -t; a <= t + 1e-12; a += h)
            for (double b = -t; b <= t + 1e-12; b += h) {
                if (a * a + b * b > t * t) continue;
                const double d = (Vec(vec({t, a, b})) - target).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = vec({t, a, b});
                }
            }
    return best;
}

}  // namespace

TEST_CASE("second-order projection examples") {
    const ConeList soc{{ConeKind::SecondOrder, 3}};
    CHECK((project_dual(vec({1, 0, 0}), soc) - vec({1, 0, 0})).norm() == 0.0);
    CHECK((project_dual(vec({-1, 0, 0}), soc)).norm() == 0.0);
    const Vec p = project_dual(vec({0, 1, 0}), soc);
    CHECK((p - vec({0.5, 0.5, 0})).norm() < 1e-15);

    // independent check of the closed form
    const Vec brute = grid_nearest_soc(vec({0, 1, 0}), 0.01);
    CHECK((brute - p).norm() < 0.02);
    const Vec q = project_dual(vec({0.3, -0.9, 0.7}), soc);
    CHECK((grid_nearest_soc(vec({0.3, -0.9, 0.7}), 0.01) - q).norm() < 0.02);
}

TEST_CASE("zero blocks are free in K* and zero in K") {
    const ConeList z{{ConeKind::Zero, 2}};
    CHECK(project_dual(vec({-3, 4}), z) == vec({-3, 4}));
    CHECK(project_primal(vec({-3, 4}), z).norm() == 0.0);
}

TEST_CASE("projection dimension mismatch") {
    CHECK_THROWS_AS(project_dual(vec({1, 2}), ConeList{{ConeKind::Nonnegative, 3}}), Error);
}

TEST_CASE("projection properties on random points") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd(0.0, 2.0);
    const ConeList cones = mixed_cones();
    const Index m = total_dim(cones);
    for (int trial = 0; trial < 200; ++trial) {
        Vec a(m), b(m);
        for (Index i = 0; i < m; ++i) {
            a(i) = nd(rng);
            b(i) = nd(rng);
        }
        for (bool dual : {false, true}) {
            auto P = [&](const Vec& v) { return dual ? project_dual(v, cones) : project_primal(v, cones); };
            const Vec pa = P(a), pb = P(b);
            CHECK((P(pa) - pa).norm() < 1e-12);                 // idempotent
            CHECK((pa - pb).norm() <= (a - b).norm() + 1e-12);  // non-expansive
            CHECK(std::abs(pa.dot(pa - a)) < 1e-10);            // Moreau orthogonality
        }
        // Pi_K*(v) - v lies in K (the polar of K* is -K).
        const Vec pa = project_dual(a, cones);
        const Vec r = pa - a;
        CHECK((project_primal(r, cones) - r).norm() < 1e-10);
    }
}

TEST_CASE("projection derivative matches finite differences at smooth points") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd(0.0, 1.0);
    const ConeList cones = mixed_cones();
    const Index m = total_dim(cones);
    for (int trial = 0; trial < 30; ++trial) {
        Vec v(m);
        for (Index i = 0; i < m; ++i) v(i) = nd(rng);
        const auto jac = dproject_dual(v, cones);
        REQUIRE_FALSE(jac.has_kinks());
        const Matrix dense = Matrix(jac.matrix);
        const double h = 1e-6;
        for (Index j = 0; j < m; ++j) {
            Vec vp = v, vm = v;
            vp(j) += h;
            vm(j) -= h;
            const Vec fd = (project_dual(vp, cones) - project_dual(vm, cones)) / (2 * h);
            CHECK((fd - dense.col(j)).cwiseAbs().maxCoeff() <= 1e-6);
        }
        CHECK((dense - dense.transpose()).norm() < 1e-14);
    }
}

TEST_CASE("projection derivative regions and kinks") {
    const ConeList soc{{ConeKind::SecondOrder, 3}};
    auto interior = dproject_dual(vec({2, 0.5, 0.1}), soc);
    CHECK((Matrix(interior.matrix) - Matrix::Identity(3, 3)).norm() == 0.0);
    CHECK_FALSE(interior.has_kinks());

    auto polar = dproject_dual(vec({-2, 0.5, 0.1}), soc);
    CHECK(Matrix(polar.matrix).norm() == 0.0);

    auto boundary = dproject_dual(vec({1, 0.6, 0.8}), soc);
    CHECK(boundary.has_kinks());
    CHECK((Matrix(boundary.matrix) - Matrix::Identity(3, 3)).norm() == 0.0);

    const ConeList nn{{ConeKind::Nonnegative, 2}};
    auto kinked = dproject_dual(vec({0.0, -1.0}), nn);
    REQUIRE(kinked.kinks.size() == 1);
    CHECK(kinked.kinks[0] == 0);
    CHECK(Matrix(kinked.matrix)(0, 0) == 1.0);
    CHECK(Matrix(kinked.matrix)(1, 1) == 0.0);
}

TEST_CASE("build_Q") {
    SpMat A(1, 1);
    A.insert(0, 0) = 1.0;
    const SpMat Q = build_Q(A, vec({2}), vec({3}));
    Matrix expect(3, 3);
    expect << 0, 1, 3, -1, 0, 2, -3, -2, 0;
    CHECK((Matrix(Q) - expect).norm() == 0.0);

    SpMat Z(2, 3);
    CHECK(Matrix(build_Q(Z, Vec::Zero(2), Vec::Zero(3))).norm() == 0.0);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    Matrix dense(4, 5);
    for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 5; ++j) dense(i, j) = nd(rng);
    Vec b(4), c(5);
    for (Index i = 0; i < 4; ++i) b(i) = nd(rng);
    for (Index j = 0; j < 5; ++j) c(j) = nd(rng);
    const SpMat Qr = build_Q(dense.sparseView(), b, c);
    CHECK(SpMat(Qr + SpMat(Qr.transpose())).norm() == 0.0);
}

TEST_CASE("residual map at verified solutions") {
    for (const auto& toy : {testing::lp_toy(), testing::soc_toy()}) {
        const SpMat Q = build_Q(toy.problem.A, toy.problem.b, toy.problem.c);
        const ConeSpec spec = toy.problem.spec();
        const Vec z = embed_solution(toy.optimum);
        CHECK(residual_map(z, Q, spec).norm() <= 1e-8);
        CHECK((residual_map(3.7 * z, Q, spec) - residual_map(z, Q, spec)).norm() < 1e-14);

        Vec bad = z;
        bad(0) += 0.5;
        CHECK(residual_map(bad, Q, spec).norm() > 1e-3);
        CHECK((residual_map(2.0 * bad, Q, spec) - residual_map(bad, Q, spec)).norm() < 1e-14);

        Vec degenerate = z;
        degenerate(spec.N() - 1) = 0.0;
        CHECK_THROWS_AS(residual_map(degenerate, Q, spec), Error);
    }
}

TEST_CASE("construct_solution inverts embed_solution and is scale free") {
    const auto toy = testing::soc_toy();
    const ConeSpec spec = toy.problem.spec();
    const Vec z = embed_solution(toy.optimum);
    const PrimalDual a = construct_solution(z, spec);
    const PrimalDual b = construct_solution(2.0 * z, spec);
    CHECK((a.x - toy.optimum.x).norm() < 1e-14);
    CHECK((a.y - toy.optimum.y).norm() < 1e-14);
    CHECK((a.s - toy.optimum.s).norm() < 1e-14);
    CHECK((a.x - b.x).norm() < 1e-14);
    CHECK((a.y - b.y).norm() < 1e-14);
    CHECK((a.s - b.s).norm() < 1e-14);

    Vec neg = z;
    neg(spec.N() - 1) = -1.0;
    CHECK_THROWS_AS(construct_solution(neg, spec), Error);

    // v strictly inside K*: y = v, s = 0.
    ConeSpec nn{1, {{ConeKind::Nonnegative, 2}}};
    const PrimalDual sol = construct_solution(vec({0.3, 1.0, 2.0, 1.0}), nn);
    CHECK(sol.s.norm() == 0.0);
    CHECK(sol.y == vec({1.0, 2.0}));
}

TEST_CASE("kkt report of the analytic toys") {
    for (const auto& toy : {testing::lp_toy(), testing::soc_toy()}) {
        const KktReport r = kkt_report(toy.problem.A, toy.problem.b, toy.problem.c,
                                       toy.problem.cones, toy.optimum);
        CHECK(r.max() < 1e-14);
    }
}
