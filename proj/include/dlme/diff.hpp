#pragma once

// Implicit differentiation of the cone program solution map
//
//     (A, b, c)  ->  Q  ->  z = s(Q)  ->  (x*, y*, s*) = phi(z)
//
// around a solved embedding point. Forward mode pushes (dA, db, dc) through
// the chain; adjoint mode pulls a gradient on (x, y, s) back to (A, b, c).

#include "dlme/embedding_system.hpp"
#include "dlme/hsde.hpp"

#include <vector>

namespace dlme {

struct SolutionDelta {
    Vec dx;
    Vec dy;
    Vec ds;
    bool approximate = false;  ///< least-squares fallback was used
};

struct ParameterGradient {
    SpMat gA;  ///< restricted to the sparsity pattern of A
    Vec gb;
    Vec gc;
    bool approximate = false;
};

class DerivativeContext {
public:
    /// Throws Solver when the bundle is not optimal, Numerical when omega <= 0.
    /// A singular linearization is kept (approximate mode) unless
    /// `allow_approximate` is false, in which case Numerical is thrown with a
    /// condition estimate in the message.
    static DerivativeContext make(const ConeProblem& problem, const SolutionBundle& bundle,
                                  double kink_tol = kDefaultKinkTol,
                                  bool allow_approximate = true);

    /// The same linearization with the projection derivative of the kinked
    /// row (or second-order block starting at `row`) taken from the side away
    /// from the cone interior. Comparing the two gives both one-sided
    /// derivatives through that kink.
    DerivativeContext with_other_side(Index row) const;

    /// Directional derivative of the solution map. dA must have the shape of A
    /// (an empty matrix of the right shape means dA = 0).
    SolutionDelta forward(const SpMat& dA, const Vec& db, const Vec& dc) const;

    /// Gradient of <gx, x*> + <gy, y*> + <gs, s*> with respect to (A, b, c).
    ParameterGradient adjoint(const Vec& gx, const Vec& gy, const Vec& gs) const;

    /// Program rows whose projection is taken at a non-differentiable point.
    const std::vector<Index>& kink_rows() const { return system_.projection_jacobian().kinks; }
    bool has_kinks() const { return !kink_rows().empty(); }
    /// True when the linearization is singular and solves fall back to least squares.
    bool approximate() const { return !system_.factorized(); }
    double condition_estimate() const { return system_.condition_estimate(); }

    /// M = ((Q - I) DPi(z) + I) / omega.
    const SpMat& system_matrix() const { return system_.jacobian(); }
    const ConeProblem& problem() const { return problem_; }
    const PrimalDual& solution() const { return solution_; }
    const Vec& embedding_point() const { return system_.point(); }

    /// D phi(z) applied to an embedding direction dz, and its transpose.
    SolutionDelta apply_dphi(const Vec& dz) const;
    Vec apply_dphi_transpose(const Vec& gx, const Vec& gy, const Vec& gs) const;

private:
    DerivativeContext(ConeProblem problem, PrimalDual solution, EmbeddingSystem system);

    ConeProblem problem_;
    PrimalDual solution_;
    EmbeddingSystem system_;
    SpMat dproj_v_;  // D Pi_{K*}(v)
};

}  // namespace dlme
