#include "dlme/diff.hpp"

#include "dlme/errors.hpp"

#include <iostream>
#include <sstream>

namespace dlme {

DerivativeContext::DerivativeContext(ConeProblem problem, PrimalDual solution,
                                     EmbeddingSystem system)
    : problem_(std::move(problem)), solution_(std::move(solution)), system_(std::move(system)) {
    const Index n = problem_.A.cols(), m = problem_.A.rows();
    dproj_v_ = system_.projection_jacobian().matrix.block(n, n, m, m);
}

DerivativeContext DerivativeContext::make(const ConeProblem& problem,
                                          const SolutionBundle& bundle, double kink_tol,
                                          bool allow_approximate) {
    if (!bundle.optimal())
        fail(ErrorKind::Solver, std::string("cannot differentiate an unsolved program (status ") +
                                    to_string(bundle.status) + ")");
    const ConeSpec spec = problem.spec();
    if (bundle.z.size() != spec.N())
        fail(ErrorKind::Validation, "embedding point does not match the program");
    const double omega = bundle.z(spec.N() - 1);
    if (!(omega > 0.0)) fail(ErrorKind::Numerical, "embedding point has omega <= 0");

    const Vec z = bundle.z / omega;
    const SpMat Q = build_Q(problem.A, problem.b, problem.c);
    EmbeddingSystem system(Q, z, spec, kink_tol);
    if (!system.factorize()) {
        if (!allow_approximate) {
            std::ostringstream msg;
            msg << "singular solution-map linearization (degenerate solution)";
            fail(ErrorKind::Numerical, msg.str());
        }
        std::cerr << "warning: singular solution-map linearization; "
                     "derivatives use a least-squares solve and are approximate\n";
    }
    return DerivativeContext(problem, construct_solution(z, spec), std::move(system));
}

DerivativeContext DerivativeContext::with_other_side(Index row) const {
    const ConeSpec spec = problem_.spec();
    const Index n = spec.n;
    Index off = 0;
    Cone block{};
    for (const auto& k : spec.cones) {
        if (k.kind == ConeKind::SecondOrder ? row == off : (row >= off && row < off + k.dim)) {
            block = k;
            if (k.kind != ConeKind::SecondOrder) {
                block.dim = 1;
                off = row;
            }
            break;
        }
        off += k.dim;
    }
    if (block.dim == 0 || row != off) fail(ErrorKind::Validation, "row is not the start of a cone block");

    // nudging the leading entry toward the polar side lands in the neighbouring region
    const Vec& z = system_.point();
    Vec v = z.segment(n + off, block.dim);
    v(0) -= 1e-7 * std::max(1.0, v.norm());
    const SpMat local = dproject_dual(v, {block}, 0.0).matrix;

    const SpMat& full = system_.projection_jacobian().matrix;
    const Index lo = n + off, hi = n + off + block.dim;
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(full.nonZeros() + local.nonZeros()));
    for (Index col = 0; col < full.outerSize(); ++col)
        for (SpMat::InnerIterator it(full, col); it; ++it)
            if (it.row() < lo || it.row() >= hi || it.col() < lo || it.col() >= hi)
                trips.emplace_back(it.row(), it.col(), it.value());
    for (Index col = 0; col < local.outerSize(); ++col)
        for (SpMat::InnerIterator it(local, col); it; ++it)
            trips.emplace_back(lo + it.row(), lo + col, it.value());
    ProjectionJacobian dpi;
    dpi.matrix.resize(full.rows(), full.cols());
    dpi.matrix.setFromTriplets(trips.begin(), trips.end());
    dpi.kinks = system_.projection_jacobian().kinks;

    const SpMat Q = build_Q(problem_.A, problem_.b, problem_.c);
    EmbeddingSystem system(Q, z, spec, std::move(dpi));
    system.factorize();
    return DerivativeContext(problem_, solution_, std::move(system));
}

SolutionDelta DerivativeContext::apply_dphi(const Vec& dz) const {
    const Index n = problem_.A.cols(), m = problem_.A.rows();
    const double omega = system_.omega();
    const Vec dv = dz.segment(n, m);
    const double dw = dz(n + m);
    const Vec pdv = dproj_v_ * dv;
    SolutionDelta out;
    out.dx = (dz.head(n) - solution_.x * dw) / omega;
    out.dy = (pdv - solution_.y * dw) / omega;
    out.ds = (pdv - dv - solution_.s * dw) / omega;
    return out;
}

Vec DerivativeContext::apply_dphi_transpose(const Vec& gx, const Vec& gy, const Vec& gs) const {
    const Index n = problem_.A.cols(), m = problem_.A.rows();
    const double omega = system_.omega();
    Vec out(n + m + 1);
    out.head(n) = gx;
    out.segment(n, m) = dproj_v_ * (gy + gs) - gs;
    out(n + m) = -(solution_.x.dot(gx) + solution_.y.dot(gy) + solution_.s.dot(gs));
    return out / omega;
}

SolutionDelta DerivativeContext::forward(const SpMat& dA, const Vec& db, const Vec& dc) const {
    const Index n = problem_.A.cols(), m = problem_.A.rows();
    if (dA.rows() != m || dA.cols() != n || db.size() != m || dc.size() != n)
        fail(ErrorKind::Validation, "perturbation shapes do not match the program");
    const Vec& pz = system_.projected_point();
    const Vec px = pz.head(n), py = pz.segment(n, m);
    const double pw = pz(n + m);

    // dQ Pi(z) with dQ = [[0, dA^T, dc], [-dA, 0, db], [-dc^T, -db^T, 0]]
    Vec rhs(n + m + 1);
    rhs.head(n) = dA.transpose() * py + dc * pw;
    rhs.segment(n, m) = -(dA * px) + db * pw;
    rhs(n + m) = -dc.dot(px) - db.dot(py);
    rhs /= system_.omega();

    bool approx = false;
    const Vec dz = system_.solve(-rhs, &approx);
    SolutionDelta out = apply_dphi(dz);
    out.approximate = approx;
    return out;
}

ParameterGradient DerivativeContext::adjoint(const Vec& gx, const Vec& gy, const Vec& gs) const {
    const Index n = problem_.A.cols(), m = problem_.A.rows();
    if (gx.size() != n || gy.size() != m || gs.size() != m)
        fail(ErrorKind::Validation, "gradient shapes do not match the program");
    const Vec h = apply_dphi_transpose(gx, gy, gs);
    bool approx = false;
    const Vec r = system_.solve_transpose(h, &approx);

    const Vec& pz = system_.projected_point();
    const Vec px = pz.head(n), py = pz.segment(n, m);
    const double pw = pz(n + m);
    const Vec rx = r.head(n), ry = r.segment(n, m);
    const double rw = r(n + m);
    const double inv_omega = 1.0 / system_.omega();

    ParameterGradient out;
    out.approximate = approx;
    out.gb = (rw * py - pw * ry) * inv_omega;
    out.gc = (rw * px - pw * rx) * inv_omega;
    out.gA = problem_.A;
    for (Index col = 0; col < out.gA.outerSize(); ++col)
        for (SpMat::InnerIterator it(out.gA, col); it; ++it)
            it.valueRef() = (ry(it.row()) * px(col) - py(it.row()) * rx(col)) * inv_omega;
    return out;
}

}  // namespace dlme
