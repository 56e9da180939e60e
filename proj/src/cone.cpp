#include "dlme/cone.hpp"

#include "dlme/errors.hpp"

#include <algorithm>
#include <cmath>

namespace dlme {

const char* to_string(ConeKind kind) {
    switch (kind) {
        case ConeKind::Zero: return "zero";
        case ConeKind::Nonnegative: return "nonnegative";
        case ConeKind::SecondOrder: return "second-order";
    }
    return "unknown";
}

Index total_dim(const ConeList& cones) {
    Index m = 0;
    for (const auto& k : cones) m += k.dim;
    return m;
}

void check_cones(const ConeList& cones) {
    for (std::size_t i = 0; i < cones.size(); ++i) {
        const auto& k = cones[i];
        if (k.dim <= 0)
            fail(ErrorKind::Validation, "cone " + std::to_string(i) + " has no rows");
        if (k.kind == ConeKind::SecondOrder && k.dim < 2)
            fail(ErrorKind::Validation,
                 "second-order cone " + std::to_string(i) + " has dimension < 2");
    }
}

namespace {

void check_length(Index got, Index want, const char* what) {
    if (got != want)
        fail(ErrorKind::Validation, std::string(what) + ": expected length " +
                                        std::to_string(want) + ", got " +
                                        std::to_string(got));
}

// Projection of (t, w) onto the second-order cone, written into out.
template <typename In, typename Out>
void project_soc(const In& v, Out out) {
    const double t = v(0);
    const auto w = v.tail(v.size() - 1);
    const double nw = w.norm();
    if (nw <= t) {
        out = v;
    } else if (nw <= -t) {
        out.setZero();
    } else {
        const double a = 0.5 * (t + nw);
        out(0) = a;
        out.tail(v.size() - 1) = (a / nw) * w;
    }
}

Vec project_blocks(const Vec& v, const ConeList& cones, bool dual) {
    check_length(v.size(), total_dim(cones), "cone projection");
    Vec out(v.size());
    Index off = 0;
    for (const auto& k : cones) {
        auto src = v.segment(off, k.dim);
        auto dst = out.segment(off, k.dim);
        switch (k.kind) {
            case ConeKind::Zero:
                if (dual) dst = src; else dst.setZero();
                break;
            case ConeKind::Nonnegative:
                dst = src.cwiseMax(0.0);
                break;
            case ConeKind::SecondOrder:
                project_soc(src, dst);
                break;
        }
        off += k.dim;
    }
    return out;
}

// Appends the derivative of Pi_{K*} on v (shifted by `shift` rows/cols).
void dual_jacobian_triplets(const Vec& v, const ConeList& cones, double kink_tol,
                            Index shift, std::vector<Triplet>& trips,
                            std::vector<Index>& kinks) {
    Index off = 0;
    for (const auto& k : cones) {
        switch (k.kind) {
            case ConeKind::Zero:
                for (Index i = 0; i < k.dim; ++i)
                    trips.emplace_back(shift + off + i, shift + off + i, 1.0);
                break;
            case ConeKind::Nonnegative:
                for (Index i = 0; i < k.dim; ++i) {
                    const double vi = v(off + i);
                    if (std::abs(vi) <= kink_tol) kinks.push_back(off + i);
                    if (vi >= -kink_tol)
                        trips.emplace_back(shift + off + i, shift + off + i, 1.0);
                }
                break;
            case ConeKind::SecondOrder: {
                const Index d = k.dim;
                const double t = v(off);
                const Vec w = v.segment(off + 1, d - 1);
                const double nw = w.norm();
                const double scale = std::max(1.0, std::abs(t));
                const bool on_cone_boundary = std::abs(nw - t) <= kink_tol * scale;
                const bool on_polar_boundary = std::abs(nw + t) <= kink_tol * scale;
                if (on_cone_boundary || on_polar_boundary) kinks.push_back(off);

                if (nw <= t || on_cone_boundary) {
                    for (Index i = 0; i < d; ++i)
                        trips.emplace_back(shift + off + i, shift + off + i, 1.0);
                } else if (nw <= -t && !on_polar_boundary) {
                    // polar interior: zero derivative
                } else {
                    const Vec wh = w / nw;
                    const double ratio = t / nw;
                    const Index base = shift + off;
                    trips.emplace_back(base, base, 0.5);
                    for (Index i = 0; i < d - 1; ++i) {
                        trips.emplace_back(base, base + 1 + i, 0.5 * wh(i));
                        trips.emplace_back(base + 1 + i, base, 0.5 * wh(i));
                        for (Index j = 0; j < d - 1; ++j) {
                            double val = -0.5 * ratio * wh(i) * wh(j);
                            if (i == j) val += 0.5 * (1.0 + ratio);
                            trips.emplace_back(base + 1 + i, base + 1 + j, val);
                        }
                    }
                }
                break;
            }
        }
        off += k.dim;
    }
}

}  // namespace

Vec project_primal(const Vec& v, const ConeList& cones) {
    return project_blocks(v, cones, false);
}

Vec project_dual(const Vec& v, const ConeList& cones) {
    return project_blocks(v, cones, true);
}

Vec project_embedding(const Vec& z, const ConeSpec& spec) {
    check_length(z.size(), spec.N(), "embedding projection");
    const Index n = spec.n, m = spec.m();
    Vec out(z.size());
    out.head(n) = z.head(n);
    out.segment(n, m) = project_dual(z.segment(n, m), spec.cones);
    out(n + m) = std::max(z(n + m), 0.0);
    return out;
}

ProjectionJacobian dproject_dual(const Vec& v, const ConeList& cones, double kink_tol) {
    check_length(v.size(), total_dim(cones), "cone projection derivative");
    std::vector<Triplet> trips;
    ProjectionJacobian jac;
    dual_jacobian_triplets(v, cones, kink_tol, 0, trips, jac.kinks);
    jac.matrix.resize(v.size(), v.size());
    jac.matrix.setFromTriplets(trips.begin(), trips.end());
    return jac;
}

ProjectionJacobian dproject_embedding(const Vec& z, const ConeSpec& spec, double kink_tol) {
    check_length(z.size(), spec.N(), "embedding projection derivative");
    const Index n = spec.n, m = spec.m();
    std::vector<Triplet> trips;
    ProjectionJacobian jac;
    trips.reserve(static_cast<std::size_t>(spec.N()) * 2);
    for (Index i = 0; i < n; ++i) trips.emplace_back(i, i, 1.0);
    dual_jacobian_triplets(z.segment(n, m), spec.cones, kink_tol, n, trips, jac.kinks);
    if (z(n + m) >= 0.0) trips.emplace_back(n + m, n + m, 1.0);
    jac.matrix.resize(spec.N(), spec.N());
    jac.matrix.setFromTriplets(trips.begin(), trips.end());
    return jac;
}

SpMat build_Q(const SpMat& A, const Vec& b, const Vec& c) {
    const Index m = A.rows(), n = A.cols();
    check_length(b.size(), m, "build_Q b");
    check_length(c.size(), n, "build_Q c");
    const Index N = n + m + 1;
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(2 * A.nonZeros() + 2 * (n + m)));
    for (Index col = 0; col < A.outerSize(); ++col) {
        for (SpMat::InnerIterator it(A, col); it; ++it) {
            // A^T in block (0,1), -A in block (1,0)
            trips.emplace_back(it.col(), n + it.row(), it.value());
            trips.emplace_back(n + it.row(), it.col(), -it.value());
        }
    }
    for (Index j = 0; j < n; ++j) {
        if (c(j) == 0.0) continue;
        trips.emplace_back(j, N - 1, c(j));
        trips.emplace_back(N - 1, j, -c(j));
    }
    for (Index i = 0; i < m; ++i) {
        if (b(i) == 0.0) continue;
        trips.emplace_back(n + i, N - 1, b(i));
        trips.emplace_back(N - 1, n + i, -b(i));
    }
    SpMat Q(N, N);
    Q.setFromTriplets(trips.begin(), trips.end());
    return Q;
}

Vec residual_map(const Vec& z, const SpMat& Q, const ConeSpec& spec) {
    check_length(z.size(), spec.N(), "residual map");
    const double omega = z(spec.N() - 1);
    if (omega == 0.0) fail(ErrorKind::Numerical, "degenerate embedding point (omega = 0)");
    const Vec zn = z / std::abs(omega);
    const Vec p = project_embedding(zn, spec);
    return Q * p - p + zn;
}

PrimalDual construct_solution(const Vec& z, const ConeSpec& spec) {
    check_length(z.size(), spec.N(), "construct_solution");
    const Index n = spec.n, m = spec.m();
    const double omega = z(n + m);
    if (!(omega > 0.0))
        fail(ErrorKind::Numerical, "cannot construct a solution from omega <= 0");
    const Vec v = z.segment(n, m);
    const Vec pv = project_dual(v, spec.cones);
    return PrimalDual{z.head(n) / omega, pv / omega, (pv - v) / omega};
}

Vec embed_solution(const PrimalDual& sol) {
    const Index n = sol.x.size(), m = sol.y.size();
    check_length(sol.s.size(), m, "embed_solution");
    Vec z(n + m + 1);
    z.head(n) = sol.x;
    z.segment(n, m) = sol.y - sol.s;
    z(n + m) = 1.0;
    return z;
}

double KktReport::max() const {
    return std::max({primal_residual, dual_residual, complementarity, duality_gap,
                     primal_cone_dist, dual_cone_dist});
}

KktReport kkt_report(const SpMat& A, const Vec& b, const Vec& c, const ConeList& cones,
                     const PrimalDual& sol) {
    KktReport r;
    r.primal_residual = (A * sol.x + sol.s - b).norm();
    r.dual_residual = (A.transpose() * sol.y + c).norm();
    r.complementarity = std::abs(sol.s.dot(sol.y));
    r.duality_gap = std::abs(c.dot(sol.x) + b.dot(sol.y));
    r.primal_cone_dist = (sol.s - project_primal(sol.s, cones)).norm();
    r.dual_cone_dist = (sol.y - project_dual(sol.y, cones)).norm();
    return r;
}

}  // namespace dlme
