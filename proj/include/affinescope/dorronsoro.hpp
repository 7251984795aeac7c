#pragma once

#include "affinescope/affine.hpp"

#include <optional>

namespace afs {

struct DorronsoroParams {
    double p = 2.0;
    double weight_exponent = 2.0;  // q in u^{−(q+1)}
    double u_min = 0.0;            // 0 picks 4 × grid step
    double u_max = 0.0;            // 0 picks a quarter of the smallest box half-width
    int centers = 1;               // Monte Carlo centers per lattice cell
    int directions = 1024;         // ball quadrature nodes
    int points_per_octave = 8;
    std::uint64_t seed = 0;
    int threads = 1;
    /// Integrate centers over this box instead of the u_max-neighbourhood of the support
    /// (lets non-compactly supported inputs such as affine maps be evaluated locally).
    std::optional<Box> window;

    void validate() const;
};

struct DorronsoroReport {
    double lhs = 0.0;
    double rhs_w1p = 0.0;
    double ratio = 0.0;
    std::optional<double> s;
    std::optional<double> lhs_hsp;
    std::optional<double> rhs_hsp;
    std::optional<double> ratio_hsp;
    double boundary_low = 0.0;   // share of the u-integral in the lowest octave
    double boundary_high = 0.0;  // share in the highest octave
    bool under_truncated = false;
    Index evaluations = 0;
};

/// One (x, u) term of the u-integral, kept for the CSV defect table.
struct DefectSample {
    Vector x;
    double u;
    double defect;
};

/// (1/V_n) ∫_{B^n} ‖f(x + uy) − P¹_u f^x(uy)‖^p dy.
double local_defect(const GridFunction& f, const Vector& x, double u, double p, const BallRule& rule);
double local_defect(const GridFunction& f, const Vector& x, double u, double p);

/// Nodes u = 2^{j/points_per_octave} inside [u_min, u_max] with trapezoid weights in log u.
/// Anchoring at powers of 2 makes enlarged ranges and dyadic dilations reuse nodes exactly.
std::pair<std::vector<double>, std::vector<double>> dyadic_log_grid(double u_min, double u_max, int points_per_octave);

/// (∫∫ local_defect(x, u) / u^{q+1} dx du)^{1/p}. Centers are drawn per lattice cell covering
/// the support dilated by u_max; f must vanish within 2·u_max of the box boundary.
double dorronsoro_lhs(const GridFunction& f, const DorronsoroParams& params, DorronsoroReport* diagnostics = nullptr,
                      std::vector<DefectSample>* table = nullptr);

/// lhs with q = p against Σ_j ‖∂_j f‖_p, and optionally lhs with q = ps against ‖(−Δ)^{s/2} f‖_p.
DorronsoroReport dorronsoro_ratio_report(const GridFunction& f, double p, const DorronsoroParams& params,
                                         std::optional<double> s = std::nullopt,
                                         std::vector<DefectSample>* table = nullptr);

struct LemmaNq {
    double lhs;
    double rhs;
};

/// Both sides of ∫₀^∞∫_{B^n} ‖f^x(uy) − P⁰_u f^x‖^p / u^{q+1} dy du ≤ 2^p/(n+q) ∫ ‖f^x(y) − f(x)‖^p / ‖y‖^{n+q} dy,
/// with f extended by zero outside its box. The left side is truncated to the u-range of params
/// (u_max = 0 picks twice the box diameter); the right side is evaluated in full.
LemmaNq lemma_nq_check(const GridFunction& f, const Vector& x, double p, double q, const DorronsoroParams& params = {});

}  // namespace afs
