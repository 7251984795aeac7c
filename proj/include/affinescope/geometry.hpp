#pragma once

#include "affinescope/core.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace afs {

enum class NormKind { Lp, Ellipsoid };

/// A norm on R^n: scale·‖x‖_p, or scale·sqrt(xᵀAx) for an SPD matrix A.
struct NormSpec {
    NormKind kind = NormKind::Lp;
    int dim = 1;
    double p = 2.0;
    Matrix matrix;  // ellipsoid only
    double scale = 1.0;

    static NormSpec lp(int n, double p);
    static NormSpec euclidean(int n) { return lp(n, 2.0); }
    static NormSpec ellipsoid(const Matrix& a);

    void validate() const;
    bool is_euclidean() const;
    /// Unit ball is a polytope (ℓ_1 or ℓ_∞).
    bool is_polytope() const { return kind == NormKind::Lp && (p == 1.0 || std::isinf(p)); }
    std::string describe() const;
};

template <typename Derived>
double norm_eval(const NormSpec& spec, const Eigen::MatrixBase<Derived>& x) {
    if (x.size() != spec.dim)
        throw ValidationError("norm_eval: point has dimension " + std::to_string(x.size()) +
                              ", norm has dimension " + std::to_string(spec.dim));
    if (spec.kind == NormKind::Lp) return spec.scale * lq_norm(x, spec.p);
    const double quad = x.dot(spec.matrix * x);
    return spec.scale * std::sqrt(std::max(quad, 0.0));
}

/// Dual norm ‖y‖_* = sup{⟨x,y⟩ : ‖x‖ ≤ 1}.
double dual_norm_eval(const NormSpec& spec, const Vector& y);

/// Tight constants with c_low·‖x‖₂ ≤ ‖x‖ ≤ c_high·‖x‖₂.
struct Sandwich {
    double c_low;
    double c_high;
};
Sandwich euclid_sandwich(const NormSpec& spec);

/// Rescales the norm so that c_low = 1, i.e. ‖x‖₂ ≤ ‖x‖_X. For ℓ_p and ellipsoids in
/// this position c_high ≤ √n holds exactly when the ellipsoid's condition number allows;
/// the actual constants are reported by euclid_sandwich.
NormSpec john_normalize(const NormSpec& spec);

/// max{x_axis : ‖x‖ ≤ 1}.
double axis_extent(const NormSpec& spec, int axis);

struct Ball {
    Vector center;
    double radius = 1.0;
    NormSpec norm;

    void validate() const;
    bool contains(const Vector& x, double slack = 1e-12) const;
};

struct Box {
    Vector lower;
    Vector upper;

    int dim() const { return static_cast<int>(lower.size()); }
    static Box cube(int n, double lo, double hi);
};

/// Points uniformly distributed in the ball, deterministic given the seed.
std::vector<Vector> sample_ball(const Ball& ball, int count, std::uint64_t seed);

/// A function on a regular lattice over a box with values in R^m under a TargetNorm.
/// Off-lattice evaluation uses multilinear interpolation.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(Box box, std::vector<int> resolution, TargetNorm target, Matrix values);

    /// Samples `fn` at every lattice point.
    static GridFunction sample(const Box& box, std::vector<int> resolution, const TargetNorm& target,
                               const std::function<Vector(const Vector&)>& fn);
    static GridFunction sample(const Box& box, int resolution, const TargetNorm& target,
                               const std::function<Vector(const Vector&)>& fn) {
        return sample(box, std::vector<int>(box.dim(), resolution), target, fn);
    }

    int dim() const { return box_.dim(); }
    int target_dim() const { return target_.m; }
    const Box& box() const { return box_; }
    const std::vector<int>& resolution() const { return resolution_; }
    const TargetNorm& target() const { return target_; }
    const Matrix& values() const { return values_; }
    Index point_count() const { return values_.cols(); }
    double step(int axis) const;
    double cell_volume() const;

    std::vector<int> multi_index(Index flat) const;
    Index flat_index(const std::vector<int>& multi) const;
    Vector point(Index flat) const;
    auto value(Index flat) const { return values_.col(flat); }

    Vector operator()(const Vector& x) const;
    /// Interpolated value written to out[0..m); throws DomainError outside the box.
    void eval_into(const double* x, double* out) const;

    bool contains(const Vector& x, double slack = 1e-12) const;
    /// Axis-aligned containment of center ± extent along each axis.
    bool contains_box(const Vector& center, const Vector& extent, double slack = 1e-12) const;
    bool contains_ball(const Ball& ball, double slack = 1e-12) const;

    const std::optional<double>& lipschitz() const { return lipschitz_; }
    void set_lipschitz(double value) { lipschitz_ = value; }
    const std::string& label() const { return label_; }
    void set_label(std::string label) { label_ = std::move(label); }

    /// Same lattice with values mapped through fn (new target may differ).
    GridFunction map_values(const TargetNorm& target,
                            const std::function<Vector(const Vector&)>& fn) const;

private:
    Box box_;
    std::vector<int> resolution_;
    TargetNorm target_;
    Matrix values_;  // m × point_count, lattice row-major (axis 0 slowest)
    std::vector<Index> strides_;
    Vector inv_step_;
    std::optional<double> lipschitz_;
    std::string label_;
};

struct LipschitzOptions {
    int far_pairs = 4096;
    std::uint64_t seed = 0;
};

/// max of ‖f(x)−f(y)‖_Y / ‖x−y‖_X over lattice-neighbour pairs (offsets in {−1,0,1}^n)
/// plus a seeded sample of far pairs. A lower bound on the Lipschitz constant.
double lipschitz_estimate(const GridFunction& f, const NormSpec& spec,
                          const LipschitzOptions& options = {});

}  // namespace afs
