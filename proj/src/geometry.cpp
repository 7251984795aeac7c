#include "affinescope/geometry.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <sstream>

namespace afs {

namespace {

constexpr int kMaxGridDim = 8;

double conjugate_exponent(double p) {
    if (p == 1.0) return kInf;
    if (std::isinf(p)) return 1.0;
    return p / (p - 1.0);
}

Matrix inverse_sqrt(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    return es.operatorInverseSqrt();
}

}  // namespace

NormSpec NormSpec::lp(int n, double p) {
    NormSpec spec;
    spec.kind = NormKind::Lp;
    spec.dim = n;
    spec.p = p;
    spec.validate();
    return spec;
}

NormSpec NormSpec::ellipsoid(const Matrix& a) {
    NormSpec spec;
    spec.kind = NormKind::Ellipsoid;
    spec.dim = static_cast<int>(a.rows());
    spec.matrix = a;
    spec.validate();
    return spec;
}

void NormSpec::validate() const {
    require(dim >= 1, "norm dimension must be positive");
    require(scale > 0.0 && std::isfinite(scale), "norm scale must be positive and finite");
    if (kind == NormKind::Lp) {
        require(p >= 1.0, "norm exponent p must be >= 1");
        return;
    }
    require(matrix.rows() == dim && matrix.cols() == dim, "ellipsoid matrix must be dim × dim");
    require(matrix.allFinite(), "ellipsoid matrix must be finite");
    require((matrix - matrix.transpose()).cwiseAbs().maxCoeff() <=
                1e-12 * std::max(1.0, matrix.cwiseAbs().maxCoeff()),
            "ellipsoid matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(matrix, Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() > 0.0, "ellipsoid matrix must be positive definite");
}

bool NormSpec::is_euclidean() const {
    if (kind == NormKind::Lp) return p == 2.0;
    return (matrix - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff() == 0.0;
}

std::string NormSpec::describe() const {
    std::ostringstream out;
    if (kind == NormKind::Lp) {
        out << "l" << (std::isinf(p) ? std::string("inf") : std::to_string(p)) << "^" << dim;
    } else {
        out << "ellipsoid^" << dim;
    }
    if (scale != 1.0) out << "*" << scale;
    return out.str();
}

double dual_norm_eval(const NormSpec& spec, const Vector& y) {
    require(y.size() == spec.dim, "dual_norm_eval: dimension mismatch");
    if (spec.kind == NormKind::Lp) return lq_norm(y, conjugate_exponent(spec.p)) / spec.scale;
    const Vector s = spec.matrix.ldlt().solve(y);
    return std::sqrt(std::max(y.dot(s), 0.0)) / spec.scale;
}

Sandwich euclid_sandwich(const NormSpec& spec) {
    spec.validate();
    if (spec.kind == NormKind::Lp) {
        const double inv_p = std::isinf(spec.p) ? 0.0 : 1.0 / spec.p;
        const double factor = std::pow(static_cast<double>(spec.dim), inv_p - 0.5);
        if (spec.p >= 2.0) return {factor * spec.scale, spec.scale};
        return {spec.scale, factor * spec.scale};
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(spec.matrix, Eigen::EigenvaluesOnly);
    return {std::sqrt(es.eigenvalues().minCoeff()) * spec.scale,
            std::sqrt(es.eigenvalues().maxCoeff()) * spec.scale};
}

NormSpec john_normalize(const NormSpec& spec) {
    NormSpec out = spec;
    out.scale = spec.scale / euclid_sandwich(spec).c_low;
    return out;
}

double axis_extent(const NormSpec& spec, int axis) {
    Vector e = Vector::Zero(spec.dim);
    e(axis) = 1.0;
    return dual_norm_eval(spec, e);
}

void Ball::validate() const {
    norm.validate();
    require(radius > 0.0 && std::isfinite(radius), "ball radius must be positive");
    require(center.size() == norm.dim, "ball center dimension must match its norm");
}

bool Ball::contains(const Vector& x, double slack) const {
    return norm_eval(norm, Vector(x - center)) <= radius * (1.0 + slack) + slack;
}

Box Box::cube(int n, double lo, double hi) {
    return Box{Vector::Constant(n, lo), Vector::Constant(n, hi)};
}

std::vector<Vector> sample_ball(const Ball& ball, int count, std::uint64_t seed) {
    ball.validate();
    require(count >= 1, "sample_ball: count must be >= 1");
    const int n = ball.norm.dim;
    Rng rng(seed);
    auto unit_euclidean = [&]() {
        Vector g(n);
        double len = 0.0;
        do {
            for (int i = 0; i < n; ++i) g(i) = rng.normal();
            len = g.norm();
        } while (len == 0.0);
        const double r = std::pow(rng.uniform(), 1.0 / n);
        return Vector(g * (r / len));
    };

    std::vector<Vector> points;
    points.reserve(count);
    if (ball.norm.kind == NormKind::Ellipsoid) {
        const Matrix map = inverse_sqrt(ball.norm.matrix) * (ball.radius / ball.norm.scale);
        for (int i = 0; i < count; ++i) points.push_back(ball.center + map * unit_euclidean());
        return points;
    }
    if (ball.norm.p == 2.0) {
        const double r = ball.radius / ball.norm.scale;
        for (int i = 0; i < count; ++i) points.push_back(ball.center + r * unit_euclidean());
        return points;
    }
    // rejection from the Euclidean ball that contains the X-ball
    const double outer = ball.radius / euclid_sandwich(ball.norm).c_low;
    std::uint64_t attempts = 0;
    std::uint64_t accepted = 0;
    while (static_cast<int>(points.size()) < count) {
        const Vector z = outer * unit_euclidean();
        ++attempts;
        if (norm_eval(ball.norm, z) <= ball.radius) {
            points.push_back(ball.center + z);
            ++accepted;
        }
        if (attempts >= 1000000 && static_cast<double>(accepted) < 1e-6 * attempts)
            throw NumericalError("sample_ball: rejection acceptance rate below 1e-6 for " +
                                 ball.norm.describe() + " (degenerate norm?)");
    }
    return points;
}

GridFunction::GridFunction(Box box, std::vector<int> resolution, TargetNorm target, Matrix values)
    : box_(std::move(box)),
      resolution_(std::move(resolution)),
      target_(target),
      values_(std::move(values)) {
    const int n = box_.dim();
    require(n >= 1 && n <= kMaxGridDim, "grid dimension must be in [1, 8]");
    require(box_.upper.size() == n, "box corners must have equal dimension");
    require(static_cast<int>(resolution_.size()) == n, "one resolution per axis required");
    target_.validate();
    Index total = 1;
    for (int a = 0; a < n; ++a) {
        require(resolution_[a] >= 2, "grid resolution must be >= 2 per axis");
        require(box_.upper(a) > box_.lower(a), "box must have positive extent on every axis");
        total *= resolution_[a];
    }
    require(values_.rows() == target_.m, "grid values must have m rows");
    require(values_.cols() == total, "grid values must have one column per lattice point");
    require(values_.allFinite(), "grid values must be finite");
    strides_.assign(n, 1);
    for (int a = n - 2; a >= 0; --a) strides_[a] = strides_[a + 1] * resolution_[a + 1];
    inv_step_.resize(n);
    for (int a = 0; a < n; ++a) inv_step_(a) = 1.0 / step(a);
}

GridFunction GridFunction::sample(const Box& box, std::vector<int> resolution,
                                  const TargetNorm& target,
                                  const std::function<Vector(const Vector&)>& fn) {
    Index total = 1;
    for (int r : resolution) total *= r;
    const int n = box.dim();
    require(static_cast<int>(resolution.size()) == n, "one resolution per axis required");
    Matrix values(target.m, total);
    std::vector<int> multi(n, 0);
    Vector x(n);
    for (Index flat = 0; flat < total; ++flat) {
        for (int a = 0; a < n; ++a) {
            const double t = static_cast<double>(multi[a]) / (resolution[a] - 1);
            x(a) = box.lower(a) + t * (box.upper(a) - box.lower(a));
        }
        const Vector v = fn(x);
        require(v.size() == target.m, "sampled function returned wrong dimension");
        values.col(flat) = v;
        for (int a = n - 1; a >= 0; --a) {
            if (++multi[a] < resolution[a]) break;
            multi[a] = 0;
        }
    }
    return GridFunction(box, std::move(resolution), target, std::move(values));
}

double GridFunction::step(int axis) const {
    return (box_.upper(axis) - box_.lower(axis)) / (resolution_[axis] - 1);
}

double GridFunction::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim(); ++a) v *= step(a);
    return v;
}

std::vector<int> GridFunction::multi_index(Index flat) const {
    std::vector<int> multi(dim());
    for (int a = 0; a < dim(); ++a) {
        multi[a] = static_cast<int>(flat / strides_[a]);
        flat %= strides_[a];
    }
    return multi;
}

Index GridFunction::flat_index(const std::vector<int>& multi) const {
    Index flat = 0;
    for (int a = 0; a < dim(); ++a) flat += multi[a] * strides_[a];
    return flat;
}

Vector GridFunction::point(Index flat) const {
    const auto multi = multi_index(flat);
    Vector x(dim());
    for (int a = 0; a < dim(); ++a) {
        const double t = static_cast<double>(multi[a]) / (resolution_[a] - 1);
        x(a) = box_.lower(a) + t * (box_.upper(a) - box_.lower(a));
    }
    return x;
}

Vector GridFunction::operator()(const Vector& x) const {
    require(x.size() == dim(), "grid evaluation: point dimension mismatch");
    Vector out(target_.m);
    eval_into(x.data(), out.data());
    return out;
}

void GridFunction::eval_into(const double* x, double* out) const {
    const int n = dim();
    const int m = target_.m;
    std::array<Index, kMaxGridDim> base{};
    std::array<double, kMaxGridDim> frac{};
    Index origin = 0;
    for (int a = 0; a < n; ++a) {
        const double t = (x[a] - box_.lower(a)) * inv_step_(a);
        const double last = resolution_[a] - 1;
        if (!(t >= -1e-9 * last - 1e-12 && t <= last * (1.0 + 1e-9) + 1e-12)) {
            std::ostringstream msg;
            msg << "grid evaluation outside box on axis " << a << " (x=" << x[a] << ", box=["
                << box_.lower(a) << ", " << box_.upper(a) << "])";
            throw DomainError(msg.str());
        }
        Index i = static_cast<Index>(std::floor(t));
        i = std::clamp<Index>(i, 0, resolution_[a] - 2);
        base[a] = i;
        frac[a] = std::clamp(t - static_cast<double>(i), 0.0, 1.0);
        origin += i * strides_[a];
    }
    for (int j = 0; j < m; ++j) out[j] = 0.0;
    const int corners = 1 << n;
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        Index flat = origin;
        for (int a = 0; a < n; ++a) {
            if (c & (1 << a)) {
                w *= frac[a];
                flat += strides_[a];
            } else {
                w *= 1.0 - frac[a];
            }
        }
        if (w == 0.0) continue;
        const double* col = values_.data() + flat * m;
        for (int j = 0; j < m; ++j) out[j] += w * col[j];
    }
}

bool GridFunction::contains(const Vector& x, double slack) const {
    for (int a = 0; a < dim(); ++a) {
        const double tol = slack * (1.0 + std::abs(box_.upper(a) - box_.lower(a)));
        if (x(a) < box_.lower(a) - tol || x(a) > box_.upper(a) + tol) return false;
    }
    return true;
}

bool GridFunction::contains_box(const Vector& center, const Vector& extent, double slack) const {
    for (int a = 0; a < dim(); ++a) {
        const double tol = slack * (1.0 + std::abs(box_.upper(a) - box_.lower(a)));
        if (center(a) - extent(a) < box_.lower(a) - tol) return false;
        if (center(a) + extent(a) > box_.upper(a) + tol) return false;
    }
    return true;
}

bool GridFunction::contains_ball(const Ball& ball, double slack) const {
    Vector extent(dim());
    for (int a = 0; a < dim(); ++a) extent(a) = ball.radius * axis_extent(ball.norm, a);
    return contains_box(ball.center, extent, slack);
}

GridFunction GridFunction::map_values(const TargetNorm& target,
                                      const std::function<Vector(const Vector&)>& fn) const {
    Matrix mapped(target.m, point_count());
    for (Index i = 0; i < point_count(); ++i) mapped.col(i) = fn(Vector(values_.col(i)));
    GridFunction out(box_, resolution_, target, std::move(mapped));
    out.label_ = label_;
    return out;
}

double lipschitz_estimate(const GridFunction& f, const NormSpec& spec,
                          const LipschitzOptions& options) {
    require(spec.dim == f.dim(), "lipschitz_estimate: norm dimension must match the grid");
    spec.validate();
    const int n = f.dim();
    const Index total = f.point_count();
    require(total >= 2, "lipschitz_estimate needs at least two lattice points");

    // lexicographically positive offsets in {-1,0,1}^n
    std::vector<std::vector<int>> offsets;
    const int combos = static_cast<int>(std::pow(3, n));
    for (int c = 0; c < combos; ++c) {
        std::vector<int> off(n);
        int code = c;
        for (int a = n - 1; a >= 0; --a) {
            off[a] = code % 3 - 1;
            code /= 3;
        }
        const auto first = std::find_if(off.begin(), off.end(), [](int v) { return v != 0; });
        if (first != off.end() && *first > 0) offsets.push_back(off);
    }

    const auto& res = f.resolution();
    double best = 0.0;
    Vector dx(n);
    auto consider = [&](Index i, Index j) {
        dx = f.point(j) - f.point(i);
        const double denom = norm_eval(spec, dx);
        if (denom <= 0.0) return;
        const double num = f.target()(f.value(j) - f.value(i));
        best = std::max(best, num / denom);
    };

    for (Index i = 0; i < total; ++i) {
        const auto multi = f.multi_index(i);
        for (const auto& off : offsets) {
            std::vector<int> other(n);
            bool inside = true;
            for (int a = 0; a < n; ++a) {
                other[a] = multi[a] + off[a];
                if (other[a] < 0 || other[a] >= res[a]) {
                    inside = false;
                    break;
                }
            }
            if (inside) consider(i, f.flat_index(other));
        }
    }
    // far pairs live on a fixed dyadic sublattice so nested refinements draw the same
    // physical points and the estimate stays monotone
    std::vector<int> sub(n);
    for (int a = 0; a < n; ++a) sub[a] = std::gcd(res[a] - 1, 64);
    Rng rng(options.seed);
    std::vector<int> mi(n), mj(n);
    for (int k = 0; k < options.far_pairs; ++k) {
        for (int a = 0; a < n; ++a) {
            const int stride = (res[a] - 1) / sub[a];
            mi[a] = static_cast<int>(rng.below(sub[a] + 1)) * stride;
            mj[a] = static_cast<int>(rng.below(sub[a] + 1)) * stride;
        }
        if (mi != mj) consider(f.flat_index(mi), f.flat_index(mj));
    }
    return best;
}

}  // namespace afs
