#pragma once

#include "affinescope/geometry.hpp"

#include <vector>

namespace afs {

inline constexpr int kDefaultBallNodes = 4096;

/// Gauss–Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussRule gauss_legendre(int order);

/// Composite Gauss–Legendre on [a, b] split into `panels` equal pieces.
GaussRule composite_gauss(double a, double b, int panels, int order = 8);

/// A cubature rule for the normalized uniform measure on a unit ball.
/// Nodes are in unit-ball coordinates; weights are >= 0 and sum to 1. Zero-weight nodes
/// (boundary, panel endpoints) only take part in sup evaluation.
struct BallRule {
    Matrix nodes;          // n × N
    Vector weights;        // N
    Matrix moment_inverse;  // (Σ w z zᵀ)^{-1}

    int dim() const { return static_cast<int>(nodes.rows()); }
    Index size() const { return nodes.cols(); }
};

/// Rule on the unit ball of `norm`: composite Gauss for n = 1, polar Gauss for n = 2,
/// antipodal scrambled Halton for n >= 3. `count` is the approximate number of weighted nodes.
BallRule make_ball_rule(const NormSpec& norm, int count = kDefaultBallNodes, std::uint64_t seed = 0);

/// Shared, lazily built rules (thread safe). References stay valid for the program lifetime.
const BallRule& ball_rule(const NormSpec& norm, int count = kDefaultBallNodes, std::uint64_t seed = 0);
const BallRule& euclidean_rule(int n, int count = kDefaultBallNodes, std::uint64_t seed = 0);

/// Independent denser rule used to re-validate reported errors.
const BallRule& validation_rule(const NormSpec& norm);

/// Values of f at center + radius·node for every node (m × N).
/// Throws DomainError when the scaled ball leaves the grid's box.
Matrix sample_on_rule(const GridFunction& f, const Vector& center, double radius,
                      const NormSpec& norm, const BallRule& rule);

/// Φ^{-1}, accurate to about 1e-15 on (0, 1).
double inverse_normal_cdf(double u);

/// Radical inverse of i in the given prime base.
double radical_inverse(std::uint64_t i, int base);

/// Adaptive Gauss–Kronrod (7, 15) on [a, b]. Throws NumericalError when the error
/// estimate stays above tol after max_depth bisections.
double integrate_adaptive(const std::function<double(double)>& fn, double a, double b,
                          double tol = 1e-13, int max_depth = 48);

/// Unit directions (columns) with a common weight so that the weights sum to the area of
/// S^{n−1}: ±1 for n = 1, equispaced angles for n = 2, Halton-normal points otherwise.
std::pair<Matrix, double> sphere_rule(int n, int count);

}  // namespace afs
