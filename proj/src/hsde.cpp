#include "dlme/hsde.hpp"

#include "dlme/embedding_system.hpp"
#include "dlme/errors.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <iostream>

namespace dlme {

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::MaxIterations: return "max-iterations";
    }
    return "unknown";
}

void ConeProblem::validate() const {
    check_cones(cones);
    if (total_dim(cones) != A.rows())
        fail(ErrorKind::Validation, "cone dimensions do not sum to the number of rows of A");
    if (b.size() != A.rows()) fail(ErrorKind::Validation, "b has the wrong length");
    if (c.size() != A.cols()) fail(ErrorKind::Validation, "c has the wrong length");
    Eigen::VectorXi row_nnz = Eigen::VectorXi::Zero(A.rows());
    for (Index col = 0; col < A.outerSize(); ++col)
        for (SpMat::InnerIterator it(A, col); it; ++it)
            if (it.value() != 0.0) ++row_nnz(it.row());
    for (Index i = 0; i < A.rows(); ++i)
        if (row_nnz(i) == 0)
            fail(ErrorKind::Validation, "row " + std::to_string(i) + " of A is all zero");
}

namespace {

struct Scaling {
    Vec D;  // rows
    Vec E;  // columns
    double sb = 1.0;
    double sc = 1.0;
};

double clamp_scale(double v) { return std::clamp(v, 1e-4, 1e4); }

// Ruiz equilibration; row factors are shared across each second-order block
// so the scaled cone is the same cone.
Scaling equilibrate(SpMat& A, Vec& b, Vec& c, const ConeList& cones, bool enabled) {
    const Index m = A.rows(), n = A.cols();
    Scaling sc{Vec::Ones(m), Vec::Ones(n), 1.0, 1.0};
    if (enabled) {
        for (int pass = 0; pass < 20; ++pass) {
            Vec rmax = Vec::Zero(m), cmax = Vec::Zero(n);
            for (Index col = 0; col < A.outerSize(); ++col)
                for (SpMat::InnerIterator it(A, col); it; ++it) {
                    const double a = std::abs(it.value());
                    rmax(it.row()) = std::max(rmax(it.row()), a);
                    cmax(col) = std::max(cmax(col), a);
                }
            Vec dr(m), dc(n);
            Index off = 0;
            for (const auto& k : cones) {
                if (k.kind == ConeKind::SecondOrder) {
                    const double mean = rmax.segment(off, k.dim).mean();
                    dr.segment(off, k.dim).setConstant(
                        mean > 0 ? clamp_scale(1.0 / std::sqrt(mean)) : 1.0);
                } else {
                    for (Index i = off; i < off + k.dim; ++i)
                        dr(i) = rmax(i) > 0 ? clamp_scale(1.0 / std::sqrt(rmax(i))) : 1.0;
                }
                off += k.dim;
            }
            for (Index j = 0; j < n; ++j)
                dc(j) = cmax(j) > 0 ? clamp_scale(1.0 / std::sqrt(cmax(j))) : 1.0;
            A = dr.asDiagonal() * A * dc.asDiagonal();
            sc.D = sc.D.cwiseProduct(dr);
            sc.E = sc.E.cwiseProduct(dc);
            if ((dr.array() - 1.0).abs().maxCoeff() < 1e-3 &&
                (dc.array() - 1.0).abs().maxCoeff() < 1e-3)
                break;
        }
        for (Index i = 0; i < m; ++i) sc.D(i) = clamp_scale(sc.D(i));
        for (Index j = 0; j < n; ++j) sc.E(j) = clamp_scale(sc.E(j));
    }
    b = sc.D.cwiseProduct(b);
    c = sc.E.cwiseProduct(c);
    if (enabled) {
        const double nb = b.norm(), nc = c.norm();
        sc.sb = 1.0 / std::max(nb, 1e-4);
        sc.sc = 1.0 / std::max(nc, 1e-4);
        b *= sc.sb;
        c *= sc.sc;
    }
    A.makeCompressed();
    return sc;
}

// Projection of u onto R^n x K* x R_+.
void project_u(Vec& u, Index n, const ConeList& cones) {
    const Index m = u.size() - n - 1;
    u.segment(n, m) = project_dual(Vec(u.segment(n, m)), cones);
    u(n + m) = std::max(u(n + m), 0.0);
}

struct Unscaled {
    PrimalDual sol;
    double pres = 0, dres = 0, gap = 0;
    double worst() const { return std::max({pres, dres, gap}); }
};

}  // namespace

std::optional<Vec> refine_embedding(const SpMat& Q, const ConeSpec& spec, Vec z, double tol,
                                    int max_steps, double kink_tol, int* steps) {
    const Index N = spec.N();
    int taken = 0;
    if (steps) *steps = 0;
    if (!(z(N - 1) > 0.0) || !z.allFinite()) return std::nullopt;
    z /= z(N - 1);
    Vec F = residual_map(z, Q, spec);
    double nf = F.norm();
    for (; taken <= max_steps; ++taken) {
        if (nf <= tol) {
            if (steps) *steps = taken;
            return z;
        }
        if (taken == max_steps) break;
        EmbeddingSystem sys(Q, z, spec, kink_tol);
        sys.factorize();
        sys.set_min_norm(false);
        bool approximate = false;  // degenerate points take least-squares steps
        Vec d = sys.solve(-F, &approximate);
        if (!d.allFinite()) break;
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
            Vec trial = z + t * d;
            const double omega = trial(N - 1);
            if (!(omega > 0.0)) continue;
            trial /= omega;
            Vec Ft = residual_map(trial, Q, spec);
            const double nft = Ft.norm();
            if (nft < (1.0 - 1e-4 * t) * nf) {
                z = std::move(trial);
                F = std::move(Ft);
                nf = nft;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (steps) *steps = taken;
    return std::nullopt;
}

SolutionBundle solve_hsde(const ConeProblem& problem, const SolverSettings& settings,
                          const Vec* warm_start) {
    problem.validate();
    const ConeSpec spec = problem.spec();
    const Index n = spec.n, m = spec.m(), N = spec.N();
    const SpMat Q = build_Q(problem.A, problem.b, problem.c);

    SolutionBundle out;
    auto finish_optimal = [&](Vec z) {
        out.status = SolveStatus::Optimal;
        out.z = std::move(z);
        out.solution = construct_solution(out.z, spec);
        out.kkt = kkt_report(problem.A, problem.b, problem.c, problem.cones, out.solution);
        out.residual_norm = residual_map(out.z, Q, spec).norm();
        out.message = "solved";
        return out;
    };

    if (warm_start && settings.refine) {
        if (warm_start->size() != N)
            fail(ErrorKind::Validation, "warm start has the wrong dimension");
        int steps = 0;
        auto refined = refine_embedding(Q, spec, *warm_start, settings.tol,
                                        settings.refine_max_steps, settings.kink_tol, &steps);
        out.refine_steps += steps;
        if (refined) return finish_optimal(std::move(*refined));
    }

    SpMat As = problem.A;
    Vec bs = problem.b, cs = problem.c;
    const Scaling scale = equilibrate(As, bs, cs, problem.cones, settings.scaling);

    // Quasi-definite system [[I, A^T], [A, -I]] factored once.
    SpMat K(n + m, n + m);
    {
        std::vector<Triplet> trips;
        trips.reserve(static_cast<std::size_t>(As.nonZeros() + n + m));
        for (Index j = 0; j < n; ++j) trips.emplace_back(j, j, 1.0);
        for (Index i = 0; i < m; ++i) trips.emplace_back(n + i, n + i, -1.0);
        for (Index col = 0; col < As.outerSize(); ++col)
            for (SpMat::InnerIterator it(As, col); it; ++it)
                trips.emplace_back(n + it.row(), col, it.value());
        K.setFromTriplets(trips.begin(), trips.end());
    }
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(K);
    if (ldlt.info() != Eigen::Success)
        fail(ErrorKind::Numerical, "factorization of the splitting system failed");

    // Solves [[I, A^T], [-A, I]] [a; b] = w.
    auto solve_m1 = [&](const Vec& w) {
        Vec rhs(n + m);
        rhs.head(n) = w.head(n);
        rhs.tail(m) = -w.tail(m);
        return Vec(ldlt.solve(rhs));
    };

    Vec h(n + m);
    h.head(n) = cs;
    h.tail(m) = bs;
    const Vec g = solve_m1(h);
    const double denom = 1.0 + h.dot(g);

    Vec u = Vec::Zero(N), v = Vec::Zero(N);
    u(N - 1) = 1.0;
    v(N - 1) = 1.0;
    if (warm_start) {
        const PrimalDual w = construct_solution(*warm_start, spec);
        u.head(n) = w.x.cwiseQuotient(scale.E) * scale.sb;
        u.segment(n, m) = w.y.cwiseQuotient(scale.D) * scale.sc;
        v.segment(n, m) = w.s.cwiseProduct(scale.D) * scale.sb;
        u(N - 1) = 1.0;
        v(N - 1) = 0.0;
    }

    const double nb = problem.b.norm(), nc = problem.c.norm();
    auto unscale = [&](const Vec& uu, const Vec& vv) {
        Unscaled r;
        const double tau = uu(N - 1);
        r.sol.x = scale.E.cwiseProduct(uu.head(n)) / (tau * scale.sb);
        r.sol.y = scale.D.cwiseProduct(uu.segment(n, m)) / (tau * scale.sc);
        r.sol.s = vv.segment(n, m).cwiseQuotient(scale.D) / (tau * scale.sb);
        r.pres = (problem.A * r.sol.x + r.sol.s - problem.b).norm() / (1.0 + nb);
        r.dres = (problem.A.transpose() * r.sol.y + problem.c).norm() / (1.0 + nc);
        const double cx = problem.c.dot(r.sol.x), by = problem.b.dot(r.sol.y);
        r.gap = std::abs(cx + by) / (1.0 + std::abs(cx) + std::abs(by));
        return r;
    };

    const double alpha = settings.relaxation;
    double next_refine = settings.refine_start;
    Vec ut(N), w(N);
    int it = 0;
    for (; it < settings.max_iters; ++it) {
        w = u + v;
        const Vec wxy = solve_m1(w.head(n + m));
        const double tau = (w(N - 1) + h.dot(wxy)) / denom;
        ut.head(n + m) = wxy - tau * g;
        ut(N - 1) = tau;

        const Vec ur = alpha * ut + (1.0 - alpha) * u;
        Vec un = ur - v;
        project_u(un, n, problem.cones);
        v += un - ur;
        u = std::move(un);

        if ((it + 1) % settings.check_every != 0) continue;

        const double tau_k = u(N - 1), kappa = v(N - 1);
        if (tau_k > 1e-12 * std::max(1.0, kappa)) {
            const Unscaled r = unscale(u, v);
            if (settings.verbose && (it + 1) % (settings.check_every * 50) == 0)
                std::cerr << "hsde it " << it + 1 << " pres " << r.pres << " dres " << r.dres
                          << " gap " << r.gap << " tau " << tau_k << " kappa " << kappa << '\n';
            if (r.sol.x.allFinite() && r.worst() <= next_refine) {
                const Vec z0 = embed_solution(r.sol);
                if (settings.refine) {
                    int steps = 0;
                    auto refined = refine_embedding(Q, spec, z0, settings.tol,
                                                    settings.refine_max_steps,
                                                    settings.kink_tol, &steps);
                    out.refine_steps += steps;
                    if (refined) {
                        out.iterations = it + 1;
                        return finish_optimal(std::move(*refined));
                    }
                    next_refine = std::max(r.worst() * 0.1, 1e-14);
                } else if (residual_map(z0, Q, spec).norm() <= settings.tol) {
                    out.iterations = it + 1;
                    return finish_optimal(z0);
                }
            }
        }

        // Certificates of infeasibility / unboundedness.
        const Vec yc = scale.D.cwiseProduct(u.segment(n, m));
        const double by = problem.b.dot(yc);
        if (by < 0.0 && yc.allFinite()) {
            const double r = (problem.A.transpose() * yc).norm() / -by;
            if (r <= settings.infeasibility_tol && tau_k < kappa) {
                out.status = SolveStatus::Infeasible;
                out.iterations = it + 1;
                out.solution.y = yc / -by;
                out.message = "primal infeasible (dual ray certificate)";
                return out;
            }
        }
        const Vec xc = scale.E.cwiseProduct(u.head(n));
        const Vec sc = v.segment(n, m).cwiseQuotient(scale.D);
        const double cx = problem.c.dot(xc);
        if (cx < 0.0 && xc.allFinite()) {
            const double r = (problem.A * xc + sc).norm() / -cx;
            if (r <= settings.infeasibility_tol && tau_k < kappa) {
                out.status = SolveStatus::Unbounded;
                out.iterations = it + 1;
                out.solution.x = xc / -cx;
                out.solution.s = sc / -cx;
                out.message = "dual infeasible (primal ray certificate)";
                return out;
            }
        }
    }

    out.status = SolveStatus::MaxIterations;
    out.iterations = it;
    out.message = "iteration limit reached";
    if (u(N - 1) > 0.0) {
        const Unscaled r = unscale(u, v);
        out.solution = r.sol;
        out.z = embed_solution(r.sol);
        out.kkt = kkt_report(problem.A, problem.b, problem.c, problem.cones, out.solution);
        out.residual_norm = residual_map(out.z, Q, spec).norm();
    }
    return out;
}

}  // namespace dlme
