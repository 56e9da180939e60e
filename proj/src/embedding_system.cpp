#include "dlme/embedding_system.hpp"

#include "dlme/errors.hpp"


#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace dlme {

EmbeddingSystem::EmbeddingSystem(const SpMat& Q, const Vec& z, const ConeSpec& spec,
                                 double kink_tol)
    : EmbeddingSystem(Q, z, spec, dproject_embedding(z, spec, kink_tol)) {}

EmbeddingSystem::EmbeddingSystem(const SpMat& Q, const Vec& z, const ConeSpec& spec,
                                 ProjectionJacobian dpi)
    : spec_(spec), z_(z), dpi_(std::move(dpi)) {
    const Index N = spec.N();
    if (z.size() != N || Q.rows() != N || Q.cols() != N || dpi_.matrix.rows() != N)
        fail(ErrorKind::Validation, "embedding system: dimension mismatch");
    omega_ = z(N - 1);
    if (!(omega_ > 0.0))
        fail(ErrorKind::Numerical, "embedding system requires omega > 0");

    pz_ = project_embedding(z, spec);

    SpMat I(N, N);
    I.setIdentity();
    M_ = (Q - I) * dpi_.matrix + I;
    M_ /= omega_;
    M_.makeCompressed();

    // Bordering vectors, normalized for conditioning.
    const Vec pz_hat = pz_ / pz_.norm();
    const Vec z_hat = z_ / z_.norm();
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(M_.nonZeros() + 2 * N));
    for (Index col = 0; col < M_.outerSize(); ++col)
        for (SpMat::InnerIterator it(M_, col); it; ++it)
            trips.emplace_back(it.row(), it.col(), it.value());
    for (Index i = 0; i < N; ++i) {
        if (pz_hat(i) != 0.0) trips.emplace_back(i, N, pz_hat(i));
        if (z_hat(i) != 0.0) trips.emplace_back(N, i, z_hat(i));
    }
    bordered_.resize(N + 1, N + 1);
    bordered_.setFromTriplets(trips.begin(), trips.end());
    bordered_.makeCompressed();
}

bool EmbeddingSystem::factorize() {
    lu_ = std::make_shared<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>>();
    lu_->analyzePattern(bordered_);
    lu_->factorize(bordered_);
    factorized_ = lu_->info() == Eigen::Success;
    if (!factorized_) return false;

    // Probe with a deterministic consistent right-hand side.
    const Index N = spec_.N();
    Vec probe = Vec::LinSpaced(N, 1.0, 2.0);
    Vec rhs = M_ * probe;
    Vec d = solve_bordered(rhs, false);
    const double err = (M_ * d - rhs).norm();
    if (!std::isfinite(err) || err > 1e-6 * std::max(1.0, rhs.norm())) factorized_ = false;
    return factorized_;
}

Vec EmbeddingSystem::solve_bordered(const Vec& rhs, bool transpose) const {
    const Index N = spec_.N();
    Vec full = Vec::Zero(N + 1);
    full.head(N) = rhs;
    Vec sol = transpose ? Vec(lu_->transpose().solve(full)) : Vec(lu_->solve(full));
    return sol.head(N);
}

// Regularized least squares through the quasi-definite augmented matrix
//     [[I, M], [M^T, -delta I]]   (or with M^T for the transposed system).
// normal_solve returns (op^T op + delta I)^{-1} g.
Vec EmbeddingSystem::normal_solve(const Vec& g, bool transpose) const {
    constexpr double kDelta = 1e-10;
    const Index N = spec_.N();
    auto& fact = transpose ? ls_t_ : ls_;
    if (!fact) {
        const SpMat op = transpose ? SpMat(M_.transpose()) : M_;
        std::vector<Triplet> trips;
        trips.reserve(static_cast<std::size_t>(op.nonZeros() + 2 * N));
        for (Index i = 0; i < N; ++i) {
            trips.emplace_back(i, i, 1.0);
            trips.emplace_back(N + i, N + i, -kDelta);
        }
        for (Index col = 0; col < op.outerSize(); ++col)
            for (SpMat::InnerIterator it(op, col); it; ++it)
                trips.emplace_back(N + col, it.row(), it.value());  // lower triangle holds op^T
        SpMat K(2 * N, 2 * N);
        K.setFromTriplets(trips.begin(), trips.end());
        fact = std::make_shared<LdltSolver>(K);
        if (fact->info() != Eigen::Success)
            fail(ErrorKind::Numerical, "least-squares factorization of the embedding system failed");
    }
    Vec full = Vec::Zero(2 * N);
    full.tail(N) = -g;
    return fact->solve(full).tail(N);
}

// Orthonormal basis of the numerical null space of op (M, or M^T). The
// regularized solve amplifies rounding noise along these directions by
// 1/delta, so solutions are projected off them explicitly. Found by block
// inverse iteration on op^T op + delta I followed by a Rayleigh-Ritz step;
// the block grows until it holds at least one non-null direction.
const Eigen::MatrixXd& EmbeddingSystem::null_basis(bool transpose) const {
    auto& cache = transpose ? null_t_ : null_;
    if (cache) return *cache;
    const Index N = spec_.N();
    const SpMat op = transpose ? SpMat(M_.transpose()) : M_;
    const double cut = 1e-7 * std::max(1.0, op.norm() / std::sqrt(static_cast<double>(N)));
    Eigen::MatrixXd basis(N, 0);
    for (Index k = std::min<Index>(8, N);; k = std::min<Index>(2 * k, N)) {
        Eigen::MatrixXd Y(N, k);
        for (Index j = 0; j < k; ++j)  // deterministic start block
            for (Index i = 0; i < N; ++i) Y(i, j) = std::sin(1.0 + 0.7 * static_cast<double>(i) + 1.3 * static_cast<double>(j * j));
        for (int pass = 0; pass < 3; ++pass) {
            for (Index j = 0; j < k; ++j) Y.col(j) = normal_solve(Y.col(j), transpose);
            Y = Eigen::HouseholderQR<Eigen::MatrixXd>(Y).householderQ() * Eigen::MatrixXd::Identity(N, k);
        }
        const Eigen::MatrixXd B = op * Y;
        Eigen::BDCSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinV);
        const Vec& sv = svd.singularValues();
        Index null_dim = 0;
        while (null_dim < sv.size() && sv(sv.size() - 1 - null_dim) <= cut) ++null_dim;
        basis = Y * svd.matrixV().rightCols(null_dim);
        if (null_dim < k || k == N) break;
    }
    cache = std::make_shared<Eigen::MatrixXd>(std::move(basis));
    return *cache;
}

// Minimum-norm least-squares solution: Tikhonov solve with a few refinement
// sweeps on the normal equations, then projection off the null space.
Vec EmbeddingSystem::least_squares(const Vec& rhs, bool transpose) const {
    const SpMat& M = M_;
    auto apply = [&](const Vec& v) { return Vec(transpose ? Vec(M.transpose() * v) : Vec(M * v)); };
    auto apply_t = [&](const Vec& v) { return Vec(transpose ? Vec(M * v) : Vec(M.transpose() * v)); };
    Vec x = normal_solve(apply_t(rhs), transpose);
    for (int sweep = 0; sweep < 8; ++sweep) {
        const Vec g = apply_t(rhs - apply(x));
        if (!(g.norm() > 1e-15 * (1.0 + rhs.norm()))) break;
        x += normal_solve(g, transpose);
    }
    if (!min_norm_) {
        if (!transpose) x -= z_ * (z_.dot(x) / z_.squaredNorm());
        return x;
    }
    const Eigen::MatrixXd& Z = null_basis(transpose);
    if (Z.cols() > 0) x -= Z * (Z.transpose() * x);
    return x;
}

Vec EmbeddingSystem::solve(const Vec& rhs, bool* approximate) const {
    if (rhs.size() != spec_.N()) fail(ErrorKind::Validation, "embedding solve: bad rhs");
    if (factorized_) {
        if (approximate) *approximate = false;
        return solve_bordered(rhs, false);
    }
    if (!approximate)
        fail(ErrorKind::Numerical, "embedding system is singular (degenerate solution)");
    *approximate = true;
    return least_squares(rhs, false);
}

Vec EmbeddingSystem::solve_transpose(const Vec& rhs, bool* approximate) const {
    if (rhs.size() != spec_.N()) fail(ErrorKind::Validation, "embedding solve: bad rhs");
    if (factorized_) {
        if (approximate) *approximate = false;
        return solve_bordered(rhs, true);
    }
    if (!approximate)
        fail(ErrorKind::Numerical, "embedding system is singular (degenerate solution)");
    *approximate = true;
    return least_squares(rhs, true);
}

double EmbeddingSystem::condition_estimate(int iterations) const {
    if (!factorized_) return std::numeric_limits<double>::infinity();
    const Index n = bordered_.rows();
    Vec x = Vec::LinSpaced(n, 1.0, -1.0).normalized();
    double sigma_max = 0.0;
    for (int k = 0; k < iterations; ++k) {
        Vec y = bordered_.transpose() * (bordered_ * x);
        sigma_max = std::sqrt(y.norm());
        x = y.normalized();
    }
    x = Vec::LinSpaced(n, -1.0, 2.0).normalized();
    double inv_sigma_min = 0.0;
    for (int k = 0; k < iterations; ++k) {
        Vec y = lu_->solve(Vec(lu_->transpose().solve(x)));
        inv_sigma_min = std::sqrt(y.norm());
        if (!std::isfinite(inv_sigma_min)) return std::numeric_limits<double>::infinity();
        x = y.normalized();
    }
    return sigma_max * inv_sigma_min;
}

}  // namespace dlme
