#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace dlme {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Index = Eigen::Index;

enum class ConeKind { Zero, Nonnegative, SecondOrder };

const char* to_string(ConeKind kind);

struct Cone {
    ConeKind kind = ConeKind::Zero;
    Index dim = 0;
};

using ConeList = std::vector<Cone>;

Index total_dim(const ConeList& cones);

/// Throws Validation if a second-order block is smaller than 2 or any block is empty.
void check_cones(const ConeList& cones);

/// Layout of the embedding point z = (u, v, omega) in R^n x R^m x R.
struct ConeSpec {
    Index n = 0;
    ConeList cones;

    Index m() const { return total_dim(cones); }
    Index N() const { return n + m() + 1; }
};

/// Euclidean projection onto the primal cone K (zero blocks map to 0).
Vec project_primal(const Vec& v, const ConeList& cones);

/// Euclidean projection onto the dual cone K* (zero blocks are free).
Vec project_dual(const Vec& v, const ConeList& cones);

/// Projection onto R^n x K* x R_+, the set the embedding iterates live in.
Vec project_embedding(const Vec& z, const ConeSpec& spec);

/// Derivative of a blockwise cone projection. Stored as a sparse symmetric
/// block-diagonal matrix; `kinks` lists row offsets (block starts for
/// second-order blocks) where the projection is not differentiable and the
/// limit taken toward the cone interior was used instead.
struct ProjectionJacobian {
    SpMat matrix;
    std::vector<Index> kinks;

    Vec apply(const Vec& v) const { return matrix * v; }
    bool has_kinks() const { return !kinks.empty(); }
};

/// Default distance to a non-differentiable boundary below which a point is
/// reported as a kink.
inline constexpr double kDefaultKinkTol = 1e-9;

ProjectionJacobian dproject_dual(const Vec& v, const ConeList& cones,
                                 double kink_tol = kDefaultKinkTol);

/// Derivative of project_embedding; kink offsets are reported relative to the
/// start of the v block (i.e. they are row indices of the cone program).
ProjectionJacobian dproject_embedding(const Vec& z, const ConeSpec& spec,
                                      double kink_tol = kDefaultKinkTol);

/// Q = [[0, A^T, c], [-A, 0, b], [-c^T, -b^T, 0]].
SpMat build_Q(const SpMat& A, const Vec& b, const Vec& c);

/// N(z, Q) = ((Q - I) Pi + I)(z / |omega|). Throws Numerical when omega == 0.
Vec residual_map(const Vec& z, const SpMat& Q, const ConeSpec& spec);

struct PrimalDual {
    Vec x;
    Vec y;
    Vec s;
};

/// phi(z) = (u, Pi_{K*}(v), Pi_{K*}(v) - v) / omega. Throws when omega <= 0.
PrimalDual construct_solution(const Vec& z, const ConeSpec& spec);

/// Right inverse of construct_solution: z = (x, y - s, 1).
Vec embed_solution(const PrimalDual& sol);

struct KktReport {
    double primal_residual = 0.0;  ///< ||Ax + s - b||
    double dual_residual = 0.0;    ///< ||A^T y + c||
    double complementarity = 0.0;  ///< |s^T y|
    double duality_gap = 0.0;      ///< |c^T x + b^T y|
    double primal_cone_dist = 0.0; ///< ||s - Pi_K(s)||
    double dual_cone_dist = 0.0;   ///< ||y - Pi_K*(y)||

    double max() const;
};

KktReport kkt_report(const SpMat& A, const Vec& b, const Vec& c,
                     const ConeList& cones, const PrimalDual& sol);

}  // namespace dlme
