#pragma once

// Linearization of the normalized residual map at an embedding point.
//
// At a solution z (omega > 0) the Jacobian M = ((Q - I) DPi(z) + I) / omega
// always has z in its right null space and Pi(z) in its left null space, so
// M itself is singular. Every consistent right-hand side (anything orthogonal
// to Pi(z), which dQ Pi(z) is for skew dQ) is solved through the bordered
// matrix
//
//     B = [ M    Pi(z) ]
//         [ z^T    0   ]
//
// which is nonsingular exactly when M has rank N - 1, i.e. at a regular
// solution. The same bordered system drives the Newton refinement of the
// solver.

#include "dlme/cone.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <memory>

namespace dlme {

class EmbeddingSystem {
public:
    /// Linearizes at z. Q is the skew matrix of the (unscaled) program.
    EmbeddingSystem(const SpMat& Q, const Vec& z, const ConeSpec& spec,
                    double kink_tol = kDefaultKinkTol);
    /// Same with a given projection derivative (e.g. a one-sided choice at a kink).
    EmbeddingSystem(const SpMat& Q, const Vec& z, const ConeSpec& spec, ProjectionJacobian dpi);

    /// M = ((Q - I) DPi(z) + I) / omega as an explicit sparse matrix.
    const SpMat& jacobian() const { return M_; }
    const ProjectionJacobian& projection_jacobian() const { return dpi_; }
    const Vec& point() const { return z_; }
    const Vec& projected_point() const { return pz_; }
    double omega() const { return omega_; }

    /// Factorizes the bordered matrix. Returns false when the factorization
    /// fails or is numerically singular.
    bool factorize();
    bool factorized() const { return factorized_; }

    /// Least-squares solves return the minimum-norm solution (default), which
    /// keeps solve and solve_transpose exact transposes of each other. Newton
    /// steps do not need that and skip the null-space computation.
    void set_min_norm(bool on) { min_norm_ = on; }

    /// Solves M d = rhs with z^T d = 0. When `approximate` is non-null and the
    /// bordered system is singular, a regularized minimum-norm least-squares
    /// solve is used instead and *approximate is set. Otherwise a singular
    /// system throws Numerical.
    Vec solve(const Vec& rhs, bool* approximate = nullptr) const;

    /// Solves M^T r = rhs with Pi(z)^T r = 0 (same fallback rules).
    Vec solve_transpose(const Vec& rhs, bool* approximate = nullptr) const;

    /// Rough 2-norm condition number of the bordered matrix from a few power
    /// and inverse-power iterations. Infinity when not factorized.
    double condition_estimate(int iterations = 12) const;

private:
    Vec solve_bordered(const Vec& rhs, bool transpose) const;
    Vec least_squares(const Vec& rhs, bool transpose) const;
    Vec normal_solve(const Vec& g, bool transpose) const;
    const Eigen::MatrixXd& null_basis(bool transpose) const;

    ConeSpec spec_;
    Vec z_;
    Vec pz_;
    double omega_ = 1.0;
    ProjectionJacobian dpi_;
    SpMat M_;
    SpMat bordered_;
    std::shared_ptr<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>> lu_;
    using LdltSolver = Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>>;
    mutable std::shared_ptr<LdltSolver> ls_, ls_t_;  // built on first least-squares solve
    mutable std::shared_ptr<Eigen::MatrixXd> null_, null_t_;  // orthonormal, same
    bool factorized_ = false;
    bool min_norm_ = true;
};

}  // namespace dlme
