#pragma once

#include "affinescope/quadrature.hpp"

namespace afs {

/// Λ(x) = intercept + linear·x in global coordinates.
struct AffineMap {
    Vector intercept;
    Matrix linear;  // m × n

    static AffineMap zero(int m, int n) { return {Vector::Zero(m), Matrix::Zero(m, n)}; }

    template <typename Derived>
    Vector operator()(const Eigen::MatrixBase<Derived>& x) const {
        return intercept + linear * x;
    }
    /// Values at center + radius·node for each rule node (m × N).
    Matrix on_rule(const Vector& center, double radius, const BallRule& rule) const;
    bool finite() const { return intercept.allFinite() && linear.allFinite(); }
};

struct FitReport {
    AffineMap map;
    double p = 2.0;
    double error = 0.0;
    int iterations = 0;
    double gap = 0.0;
    bool converged = true;
};

struct FitOptions {
    int nodes = kDefaultBallNodes;
    std::uint64_t seed = 0;
    int max_iterations = 200;
    double tolerance = 1e-8;
    int minimax_iterations = 2000;
    /// p = ∞ only: when positive, Lawson stops as soon as its certified bracket [lower, upper]
    /// lies on one side of this error level (callers that only need a yes/no decision).
    double decision_threshold = 0.0;
};

/// (1/V_n) ∫_{B^n} f(center + u z) dz.
Vector mean_P0(const GridFunction& f, const Vector& center, double u, const BallRule& rule);
Vector mean_P0(const GridFunction& f, const Vector& center, double u);

/// Matrix of w ↦ ((n+2)/(V_n u)) ∫_{B^n} ⟨z,w⟩ f(center + u z) dz, computed with the rule's
/// own second-moment matrix so that affine maps are reproduced exactly.
Matrix linear_T(const GridFunction& f, const Vector& center, double u, const BallRule& rule);
Matrix linear_T(const GridFunction& f, const Vector& center, double u);

/// P¹_u f = P⁰ + T(· − center) as a global affine map.
AffineMap legendre_P1(const GridFunction& f, const Vector& center, double u, const BallRule& rule);
AffineMap legendre_P1(const GridFunction& f, const Vector& center, double u);

/// Same operators acting on values already sampled on the rule (m × N), in unit-ball
/// coordinates: returns (P⁰, T₁) with T₁ the matrix on the unit ball.
std::pair<Vector, Matrix> projection_on_rule(const Matrix& values, const BallRule& rule);

/// Normalized L_p error (1/|ball| ∫‖r‖^p)^{1/p} of residuals sampled on the rule; p = ∞ takes
/// the max over every node including zero-weight ones.
double rule_lp_norm(const Matrix& residuals, const BallRule& rule, const TargetNorm& target, double p);

/// Best affine approximation of sampled values on a rule. `local` nodes are unit-ball
/// coordinates; the fitted map is returned in those coordinates.
FitReport best_affine_on_rule(const Matrix& values, const BallRule& rule, const TargetNorm& target,
                              double p, const FitOptions& options = {});

/// Best affine L_p approximation of f on the ball; p ∈ [1, ∞].
FitReport best_affine(const GridFunction& f, const Ball& ball, double p, const FitOptions& options = {});

/// Maps a fit in unit-ball coordinates of (center, radius) to global coordinates.
AffineMap to_global(const AffineMap& local, const Vector& center, double radius);

struct OpNorm {
    double value = 0.0;
    bool exact = true;
    int samples = 0;  // directions tried when not exact
};

/// sup{‖T w‖_Y : ‖w‖_X ≤ 1}. Exact for polytope domains, Euclidean/ellipsoid → ℓ₂ targets
/// and ℓ_∞ targets; otherwise a seeded sampling lower bound.
OpNorm op_norm(const Matrix& linear, const NormSpec& domain, const TargetNorm& target,
               std::uint64_t seed = 0, int samples = 4096);

/// ‖f − P¹f‖_{L_p(ball)} / best_affine error with the 0/0 → 1 convention.
double quasi_opt_ratio(const GridFunction& f, const Ball& ball, double p, const FitOptions& options = {});

/// ‖f ↦ T₁f‖ as an operator on L_p(B^n, Y), estimated as the max ratio over a seeded random
/// family of functions sampled on the rule plus any extra probes supplied (m × N each).
double measured_T1_norm(const BallRule& rule, const TargetNorm& target, double p, int family_size,
                        std::uint64_t seed, const std::vector<Matrix>& extra = {});

}  // namespace afs
