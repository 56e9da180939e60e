#pragma once

// Small cone programs with analytic solutions shared by the unit tests.

#include "dlme/hsde.hpp"

#include <random>

namespace dlme::testing {

using Matrix = Eigen::MatrixXd;

struct Toy {
    ConeProblem problem;
    PrimalDual optimum;
};

inline SpMat sparse(const Matrix& m) { return m.sparseView(); }

/// min x  s.t.  x >= 1   ->  x* = 1, y* = 1, s* = 0.
inline Toy lp_toy() {
    Toy t;
    Matrix A(1, 1);
    A << -1.0;
    t.problem.A = sparse(A);
    t.problem.b = Vec::Constant(1, -1.0);
    t.problem.c = Vec::Constant(1, 1.0);
    t.problem.cones = {{ConeKind::Nonnegative, 1}};
    t.optimum = {Vec::Constant(1, 1.0), Vec::Constant(1, 1.0), Vec::Zero(1)};
    return t;
}

/// min t  s.t.  ||(a, b)|| <= t,  a = 3,  b = 4   ->  t* = 5.
inline Toy soc_toy() {
    Toy t;
    Matrix A = Matrix::Zero(5, 3);
    A(0, 1) = 1.0;
    A(1, 2) = 1.0;
    A.bottomRows(3) = -Matrix::Identity(3, 3);
    t.problem.A = sparse(A);
    t.problem.b = Vec::Zero(5);
    t.problem.b(0) = 3.0;
    t.problem.b(1) = 4.0;
    t.problem.c = Vec::Zero(3);
    t.problem.c(0) = 1.0;
    t.problem.cones = {{ConeKind::Zero, 2}, {ConeKind::SecondOrder, 3}};
    Vec x(3), y(5), s = Vec::Zero(5);
    x << 5, 3, 4;
    y << -0.6, -0.8, 1.0, -0.6, -0.8;
    s.tail(3) << 5, 3, 4;
    t.optimum = {x, y, s};
    return t;
}

/// Random feasible LP  min c^T x  s.t.  lo <= x <= hi,  G x = G x0, with
/// x0 strictly inside the box.
inline ConeProblem random_box_lp(std::mt19937_64& rng, Index n, Index n_eq) {
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.5, 1.5);
    Matrix G(n_eq, n);
    for (Index i = 0; i < n_eq; ++i)
        for (Index j = 0; j < n; ++j) G(i, j) = nd(rng);
    Vec x0(n);
    for (Index j = 0; j < n; ++j) x0(j) = nd(rng);
    ConeProblem p;
    const Index m = n_eq + 2 * n;
    Matrix A = Matrix::Zero(m, n);
    A.topRows(n_eq) = G;
    A.block(n_eq, 0, n, n) = Matrix::Identity(n, n);
    A.block(n_eq + n, 0, n, n) = -Matrix::Identity(n, n);
    p.A = sparse(A);
    p.b = Vec(m);
    p.b.head(n_eq) = G * x0;
    for (Index j = 0; j < n; ++j) {
        p.b(n_eq + j) = x0(j) + ud(rng);      // x <= hi
        p.b(n_eq + n + j) = -(x0(j) - ud(rng));  // -x <= -lo
    }
    p.c = Vec(n);
    for (Index j = 0; j < n; ++j) p.c(j) = nd(rng);
    p.cones = {{ConeKind::Zero, n_eq}, {ConeKind::Nonnegative, 2 * n}};
    return p;
}

}  // namespace dlme::testing
