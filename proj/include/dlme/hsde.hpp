#pragma once

#include "dlme/cone.hpp"

#include <optional>
#include <string>

namespace dlme {

/// min c^T x  s.t.  A x + s = b,  s in K   (dual: A^T y + c = 0, y in K*).
struct ConeProblem {
    SpMat A;
    Vec b;
    Vec c;
    ConeList cones;

    ConeSpec spec() const { return ConeSpec{A.cols(), cones}; }
    /// Throws Validation on inconsistent shapes, bad cones or all-zero rows.
    void validate() const;
};

struct SolverSettings {
    double tol = 1e-8;           ///< accept when ||N(z, Q)|| <= tol
    int max_iters = 100000;      ///< splitting iterations
    double kkt_tol = 1e-6;       ///< reported KKT residuals must stay below this
    bool scaling = true;         ///< Ruiz equilibration of (A, b, c)
    double relaxation = 1.5;     ///< over-relaxation of the splitting
    bool refine = true;          ///< Newton polishing of N(z, Q) = 0
    double refine_start = 1e-4;  ///< relative residual level that triggers polishing
    int refine_max_steps = 30;
    int check_every = 20;
    double infeasibility_tol = 1e-7;
    double kink_tol = kDefaultKinkTol;
    bool verbose = false;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIterations };

const char* to_string(SolveStatus status);

struct SolutionBundle {
    SolveStatus status = SolveStatus::MaxIterations;
    PrimalDual solution;
    Vec z;                     ///< embedding point, omega normalized to 1 on success
    KktReport kkt;
    double residual_norm = 0;  ///< ||N(z, Q)|| (unscaled data)
    int iterations = 0;        ///< splitting iterations
    int refine_steps = 0;      ///< Newton steps taken
    std::string message;

    bool optimal() const { return status == SolveStatus::Optimal; }
};

/// Operator splitting on the homogeneous self-dual embedding followed by
/// Newton refinement of the residual map. `warm_start` is an embedding point
/// (omega > 0) of a nearby problem with the same layout.
SolutionBundle solve_hsde(const ConeProblem& problem, const SolverSettings& settings,
                          const Vec* warm_start = nullptr);

/// Newton iterations on N(z, Q) = 0 from z. Returns the refined point when
/// ||N|| <= tol was reached, std::nullopt otherwise. `steps` receives the
/// number of Newton steps.
std::optional<Vec> refine_embedding(const SpMat& Q, const ConeSpec& spec, Vec z,
                                    double tol, int max_steps, double kink_tol,
                                    int* steps = nullptr);

}  // namespace dlme
