#pragma once

#include "affinescope/affine.hpp"

namespace afs {

/// 2-periodic tent: φ(2Z) = 0, φ(1 + 2Z) = 1, slope ±1 in between.
double sawtooth_phi(double x);

struct SawtoothSpec {
    int m = 1;
    double p = 2.0;

    void validate() const;
    /// ℓ_p^m, the norm under which sawtooth_f is 1-Lipschitz.
    TargetNorm target() const { return TargetNorm{m, p, 0, 1.0}; }
};

/// m^{−1/p} Σ_{k=1}^m φ(2^k x)/2^k e_k.
Vector sawtooth_f(const SawtoothSpec& spec, double x);

struct TensorSpec {
    int n = 1;
    double K = 1.0;
    double epsilon = 1.0;
    SawtoothSpec inner;  // the one-dimensional block

    void validate() const;
    /// e^{(K/ε)^p}.
    double scale() const;
    /// ℓ_2^n(ℓ_p^m).
    TargetNorm target() const { return TargetNorm{n * inner.m, inner.p, inner.m, 1.0}; }
};

/// (f(x₁), f(λx₂)/λ, …, f(λ^{n−1}x_n)/λ^{n−1}) with λ = e^{(K/ε)^p}.
Vector tensor_F(const TensorSpec& spec, const Vector& x);

struct CertifyRow {
    double a = 0.0;
    double b = 0.0;
    int depth = 0;
    bool qualifying = false;  // b − a ≥ 4·2^{−m}
    double error = 0.0;       // best affine L_q error, normalized
    double bound = 0.0;       // η·m^{−1/p}·(b − a)/2
    bool ok = true;
};

struct CertifyTable {
    SawtoothSpec spec;
    double q = 2.0;
    double eta = 0.0;  // best error of the m = 1 sawtooth on [−1, 1] in L_q
    std::vector<CertifyRow> rows;
    int violations = 0;
    /// min over qualifying rows of error / (m^{−1/p}(b − a)/2), divided by η.
    double scaling = 0.0;
};

/// Scans every dyadic sub-interval of [−1, 1] down to the given depth (≤ m + 2).
CertifyTable certify_upper_bound(const SawtoothSpec& spec, double q, int dyadic_depth, const FitOptions& options = {});

struct ModulusQuery {
    double epsilon = 0.1;
    double p = 2.0;
    double r_min = 1.0 / 64;
    int center_samples = 256;  // per level for n ≥ 2, doubled each level, capped at 4096
    std::uint64_t seed = 0;
    int threads = 1;
    FitOptions fit;

    void validate() const;
};

struct BallWitness {
    Ball ball;
    AffineMap map;
    double relative_error = 0.0;  // ‖f − Λ‖_{L_p(ball)} / (ρ·Lip f)
    bool linear_norm_ok = false;  // ‖T‖_{X→Y} ≤ 3·Lip f
    double linear_norm = 0.0;
    double validated_error = 0.0;  // the same quantity on an independent dense rule
    double lipschitz = 0.0;
    bool meets_epsilon = false;
};

struct LevelRecord {
    double radius = 0.0;
    int centers = 0;
    double min_relative_error = kInf;
    bool accepted = false;
};

struct ModulusResult {
    std::optional<BallWitness> witness;
    std::vector<LevelRecord> levels;
};

/// Scans ρ = 1, 1/2, … ≥ r_min. Centers satisfy y + ρB_X ⊆ B_X: a grid of step ρ/8 in one
/// dimension, the origin plus seeded samples otherwise. Returns the first (largest) level with a
/// ball whose best affine fit, or P¹ when that wins, has relative error ≤ ε and ‖T‖ ≤ 3·Lip f.
ModulusResult search_modulus(const GridFunction& f, const NormSpec& X, const ModulusQuery& query);

struct TransferCheck {
    double threshold = 0.0;  // δ = (ε/9)^{1+n/p}
    double lp_relative = 0.0;
    double linf_relative = 0.0;
    bool applicable = true;  // ‖Λ‖_Lip ≤ 3·Lip f
    bool holds = true;
};

/// L_p relative error ≤ (ε/9)^{1+n/p} must force L_∞ relative error ≤ ε on the same ball.
TransferCheck check_lp_implies_linfty(const GridFunction& f, const Ball& ball, const AffineMap& map, double epsilon,
                                      double p);

struct CutoffOptions {
    double inner_radius = 0.0;  // r; 0 picks 1/√n
    double margin = 0.0;        // extra half-width beyond the support, 0 picks 2r/n
};

/// F(x) = f(φ(‖x‖₂)x) − f(0) with φ = 1 up to r, decreasing linearly to 0 at (1 + 1/n)r.
/// F is sampled on f's own lattice spacing, extended to a box that contains the support with the
/// requested margin, so F and f − f(0) interpolate identically on r·B^n. Requires r·B^n ⊆ B_X.
GridFunction cutoff_extend(const GridFunction& f, const NormSpec& X, const CutoffOptions& options = {});

struct PipelineParams {
    double r_min = 1.0 / 64;
    int centers = 32;      // Euclidean centers per scale (n ≥ 2); one dimension uses a grid of step u/8
    int candidates = 4;    // best (x, u) pairs per scale passed to the sub-ball averaging step
    int sub_centers = 32;  // y ∈ x + (1 − 1/n)uB^n per candidate (n ≥ 2)
    std::uint64_t seed = 0;
    int threads = 1;
    FitOptions fit;
};

/// The constructive sub-ball search: cutoff, (x, u) defect scan, Λ = P¹ at the chosen pair,
/// sub-ball averaging into y + (u/n)B_X, dense re-validation.
BallWitness find_affine_ball(const GridFunction& f, const NormSpec& X, double epsilon, double p,
                             const PipelineParams& params = {});

}  // namespace afs
