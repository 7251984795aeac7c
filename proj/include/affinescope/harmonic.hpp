#pragma once

#include "affinescope/geometry.hpp"

#include <complex>

namespace afs {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

/// Discrete Fourier coefficients of a grid function on the torus formed by its box.
/// The last lattice point on each axis is identified with the first, leaving
/// N_a = resolution_a − 1 periodic samples per axis.
class SpectralField {
public:
    SpectralField() = default;
    static SpectralField from_grid(const GridFunction& f);

    /// Back to the lattice (real part), with the periodic endpoint restored.
    GridFunction to_grid() const;

    int dim() const { return static_cast<int>(shape_.size()); }
    int channels() const { return static_cast<int>(coefficients_.rows()); }
    const std::vector<int>& shape() const { return shape_; }
    const Box& box() const { return box_; }
    const TargetNorm& target() const { return target_; }
    Index size() const { return coefficients_.cols(); }

    /// Angular frequency 2πk/L of flat index `flat` (Nyquist counted negative).
    Vector frequency(Index flat) const;

    ComplexMatrix& coefficients() { return coefficients_; }
    const ComplexMatrix& coefficients() const { return coefficients_; }

private:
    Box box_;
    std::vector<int> shape_;
    TargetNorm target_;
    ComplexMatrix coefficients_;  // channels × Π N_a, axis 0 slowest
};

/// In-place n-dimensional DFT of one channel stored row-major (axis 0 slowest).
void fft_nd(Complex* data, const std::vector<int>& shape, bool inverse);

enum class BumpKind { Phi, Psi, Omega, Theta };

/// φ, ψ_k, ω_k, θ_k of the dyadic Littlewood–Paley family.
double bump_eval(BumpKind kind, int k, double x);

enum class Symbol { FracLaplacian, Riesz, Derivative, Heat, Ma, Bump };

struct MultiplierSpec {
    Symbol family = Symbol::FracLaplacian;
    double s = 0.0;      // FracLaplacian exponent (negative allowed off ξ = 0)
    int axis = 0;        // Riesz, Derivative, Bump
    double t = 0.0;      // Heat
    double a = 2.0;      // Ma
    BumpKind bump = BumpKind::Psi;
    int k = 0;           // Bump

    void validate(int n) const;
    /// Symbol value at angular frequency ξ.
    Complex operator()(const Vector& xi) const;
};

SpectralField apply_multiplier(const SpectralField& field, const MultiplierSpec& spec);

/// L_p norm over the periodic lattice (rectangle rule on the torus).
double torus_lp_norm(const SpectralField& field, double p);

/// Σ_j ‖∂_j f‖_{L_p} with centered differences and trapezoid weights.
double sobolev_W1(const GridFunction& f, double p);

struct WspOptions {
    /// Treat f as extended by zero outside its box and add the exterior contribution.
    bool whole_space = false;
    int directions = 0;  // 0 picks a default per dimension
};

/// (∬ ‖f(x) − f(y)‖^p / ‖x − y‖₂^{n+ps} dx dy)^{1/p} by a lattice pair sum with a closed-form
/// near-diagonal correction.
double sobolev_Wsp(const GridFunction& f, double s, double p, const WspOptions& options = {});

/// ‖(−Δ)^{s/2} f‖_{L_p} on the torus. Requires f to vanish (to 1e-9 relative) outside the
/// central half of the box on every axis.
double riesz_Hsp(const GridFunction& f, double s, double p);

struct BetaIdentity {
    double lhs;
    double rhs;
};
/// (1+α)^{−θ} and sin(πθ)/π ∫₀¹ ds / (s^{1−θ}(1−s)^θ(1+αs)).
BetaIdentity beta_identity_check(double theta, double alpha);

struct SquareFunctionReport {
    double mean_power = 0.0;  // E_ε ‖Σ_j ε_j T_{θ_j} f‖_p^p
    double base_power = 0.0;  // ‖f‖_p^p
    double ratio = 0.0;
    int patterns = 0;
    bool exhaustive = false;
};

/// Randomized Littlewood–Paley square function of a 1-D field over the bands
/// j = first_band, …, first_band + bands − 1. All 2^bands sign patterns are enumerated
/// when trials is 0 or at least 2^bands.
SquareFunctionReport lp_randomized_square_function(const GridFunction& f, double p, int bands, int trials,
                                                   std::uint64_t seed, int first_band = 0);

}  // namespace afs
