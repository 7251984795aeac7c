#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace afs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad input: dimensions, parameter ranges, schema violations. Maps to exit code 2.
struct ValidationError : Error {
    using Error::Error;
};

// Query leaves the sampled region of a grid function (ball exits box, margin violated).
struct DomainError : ValidationError {
    using ValidationError::ValidationError;
};

// Iterative method failed to converge. Maps to exit code 3.
struct NumericalError : Error {
    using Error::Error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ValidationError(message);
}

/// ℓ_q norm of a dense expression, q in [1, ∞]; q = ∞ is the exact max norm.
template <typename Derived>
typename Derived::RealScalar lq_norm(const Eigen::MatrixBase<Derived>& v, double q) {
    using Real = typename Derived::RealScalar;
    if (v.size() == 0) return Real(0);
    if (std::isinf(q)) return v.cwiseAbs().maxCoeff();
    if (q == 1.0) return v.cwiseAbs().sum();
    if (q == 2.0) return v.norm();
    // scale by the max entry to avoid overflow for large q
    const Real top = v.cwiseAbs().maxCoeff();
    if (top == Real(0)) return Real(0);
    return top * std::pow((v.cwiseAbs() / top).array().pow(q).sum(), Real(1) / q);
}

/// Norm on the target space R^m: scale · ℓ_q^m, or, when block > 0, scale · ℓ_2 over
/// consecutive ℓ_q^block blocks (the ℓ_2^k(ℓ_q) product norm).
struct TargetNorm {
    int m = 1;
    double q = 2.0;
    int block = 0;
    double scale = 1.0;

    void validate() const {
        require(m >= 1, "target dimension m must be >= 1");
        require(q >= 1.0, "target exponent q must be >= 1");
        require(block >= 0 && (block == 0 || m % block == 0), "target block size must divide m");
        require(scale > 0.0 && std::isfinite(scale), "target scale must be positive");
    }

    template <typename Derived>
    double operator()(const Eigen::MatrixBase<Derived>& v) const {
        if (block == 0) return scale * lq_norm(v, q);
        double acc = 0.0;
        for (Index start = 0; start < v.size(); start += block) {
            const double b = lq_norm(v.segment(start, block), q);
            acc += b * b;
        }
        return scale * std::sqrt(acc);
    }

    bool is_euclidean() const { return block == 0 && q == 2.0; }
};

/// Deterministic 64-bit generator (mt19937_64 core) with hand-rolled transforms so
/// that sample streams do not depend on the standard library's distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    int sign() { return (next_u64() >> 63) ? 1 : -1; }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// SplitMix64 mixing of (seed, stream) into an independent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Volume of the Euclidean unit ball in R^n.
double unit_ball_volume(int n);

/// Surface measure of S^{n-1}.
double unit_sphere_area(int n);

}  // namespace afs
