#include "affinescope/harmonic.hpp"
#include "affinescope/quadrature.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>

namespace afs {

namespace {

std::vector<int> periodic_shape(const GridFunction& f) {
    std::vector<int> shape(f.dim());
    for (int a = 0; a < f.dim(); ++a) shape[a] = f.resolution()[a] - 1;
    return shape;
}

Index shape_size(const std::vector<int>& shape) {
    Index total = 1;
    for (int s : shape) total *= s;
    return total;
}

// Lattice flat index of a periodic index (same multi-index, lattice strides).
Index lattice_index(const GridFunction& f, Index flat, const std::vector<int>& shape) {
    Index out = 0;
    Index stride = 1;
    for (int a = f.dim() - 1; a >= 0; --a) {
        const Index k = flat % shape[a];
        flat /= shape[a];
        out += k * stride;
        stride *= f.resolution()[a];
    }
    return out;
}

// Product trapezoid weights on the lattice.
Vector trapezoid_weights(const GridFunction& f) {
    Vector w(f.point_count());
    for (Index i = 0; i < f.point_count(); ++i) {
        const auto multi = f.multi_index(i);
        double v = 1.0;
        for (int a = 0; a < f.dim(); ++a) {
            const bool edge = multi[a] == 0 || multi[a] == f.resolution()[a] - 1;
            v *= f.step(a) * (edge ? 0.5 : 1.0);
        }
        w(i) = v;
    }
    return w;
}

// ∂f/∂x_axis at every lattice point (m × N): centered inside, second-order one-sided at edges.
Matrix partial(const GridFunction& f, int axis) {
    const int res = f.resolution()[axis];
    const double h = f.step(axis);
    Matrix d(f.target_dim(), f.point_count());
    for (Index i = 0; i < f.point_count(); ++i) {
        auto multi = f.multi_index(i);
        const int k = multi[axis];
        auto at = [&](int j) {
            multi[axis] = j;
            return f.value(f.flat_index(multi));
        };
        if (res == 2) {
            d.col(i) = (at(1) - at(0)) / h;
        } else if (k == 0) {
            d.col(i) = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
        } else if (k == res - 1) {
            d.col(i) = (3.0 * at(res - 1) - 4.0 * at(res - 2) + at(res - 3)) / (2.0 * h);
        } else {
            d.col(i) = (at(k + 1) - at(k - 1)) / (2.0 * h);
        }
    }
    return d;
}

double phi_bump(double x) {
    const double a = std::abs(x);
    if (a <= 0.5 || a >= 2.0) return 0.0;
    return std::exp(-1.0 / ((a - 0.5) * (2.0 - a)));
}

}  // namespace

void fft_nd(Complex* data, const std::vector<int>& shape, bool inverse) {
    Eigen::FFT<double> fft;
    const int n = static_cast<int>(shape.size());
    const Index total = shape_size(shape);
    Index stride = 1;
    for (int a = n - 1; a >= 0; --a) {
        const int len = shape[a];
        std::vector<Complex> line(len), out(len);
        const Index block = stride * len;
        for (Index base = 0; base < total; base += block) {
            for (Index offset = 0; offset < stride; ++offset) {
                const Index start = base + offset;
                for (int k = 0; k < len; ++k) line[k] = data[start + k * stride];
                if (inverse)
                    fft.inv(out, line);
                else
                    fft.fwd(out, line);
                for (int k = 0; k < len; ++k) data[start + k * stride] = out[k];
            }
        }
        stride *= len;
    }
}

SpectralField SpectralField::from_grid(const GridFunction& f) {
    SpectralField field;
    field.box_ = f.box();
    field.shape_ = periodic_shape(f);
    field.target_ = f.target();
    const Index total = shape_size(field.shape_);
    field.coefficients_.resize(f.target_dim(), total);
    std::vector<Complex> line(total);
    for (int c = 0; c < f.target_dim(); ++c) {
        for (Index i = 0; i < total; ++i) line[i] = f.values()(c, lattice_index(f, i, field.shape_));
        fft_nd(line.data(), field.shape_, false);
        for (Index i = 0; i < total; ++i) field.coefficients_(c, i) = line[i];
    }
    return field;
}

GridFunction SpectralField::to_grid() const {
    const int n = dim();
    std::vector<int> res(n);
    for (int a = 0; a < n; ++a) res[a] = shape_[a] + 1;
    Index points = 1;
    for (int r : res) points *= r;
    const Index total = size();
    Matrix periodic(channels(), total);
    std::vector<Complex> line(total);
    for (int c = 0; c < channels(); ++c) {
        for (Index i = 0; i < total; ++i) line[i] = coefficients_(c, i);
        fft_nd(line.data(), shape_, true);
        for (Index i = 0; i < total; ++i) periodic(c, i) = line[i].real();
    }
    Matrix values(channels(), points);
    std::vector<int> multi(n, 0);
    for (Index flat = 0; flat < points; ++flat) {
        Index source = 0;
        for (int a = 0; a < n; ++a) source = source * shape_[a] + (multi[a] % shape_[a]);
        values.col(flat) = periodic.col(source);
        for (int a = n - 1; a >= 0; --a) {
            if (++multi[a] < res[a]) break;
            multi[a] = 0;
        }
    }
    return GridFunction(box_, res, target_, std::move(values));
}

Vector SpectralField::frequency(Index flat) const {
    const int n = dim();
    Vector xi(n);
    for (int a = n - 1; a >= 0; --a) {
        Index k = flat % shape_[a];
        flat /= shape_[a];
        if (2 * k >= shape_[a]) k -= shape_[a];
        xi(a) = 2.0 * kPi * static_cast<double>(k) / (box_.upper(a) - box_.lower(a));
    }
    return xi;
}

double bump_eval(BumpKind kind, int k, double x) {
    require(std::isfinite(x), "bump_eval: x must be finite");
    if (kind == BumpKind::Phi) return phi_bump(std::ldexp(x, k));
    if (kind == BumpKind::Theta) {
        const double y = std::ldexp(x, k);
        if (y == 0.0) return 0.0;
        const double s = std::sin(y);
        return s * s * s * s / (y * y);
    }
    if (x == 0.0) return 0.0;
    // φ(2^j x) ≠ 0 only for 2^j|x| ∈ (1/2, 2): at most two consecutive j
    const int top = -std::ilogb(x) + 1;
    double denom = 0.0;
    double terms[5];
    for (int i = 0; i < 5; ++i) {
        terms[i] = phi_bump(std::ldexp(x, top - 3 + i));
        denom += terms[i];
    }
    auto term = [&](int j) {
        const int i = j - (top - 3);
        return (i >= 0 && i < 5) ? terms[i] : phi_bump(std::ldexp(x, j));
    };
    if (denom == 0.0) return 0.0;
    if (kind == BumpKind::Psi) return term(k) / denom;
    return (term(k - 1) + term(k) + term(k + 1)) / denom;
}

void MultiplierSpec::validate(int n) const {
    switch (family) {
        case Symbol::FracLaplacian:
            require(std::isfinite(s), "frac_laplacian exponent must be finite");
            break;
        case Symbol::Riesz:
        case Symbol::Derivative:
            require(axis >= 0 && axis < n, "multiplier axis out of range");
            break;
        case Symbol::Heat:
            require(t >= 0.0 && std::isfinite(t), "heat time must be >= 0");
            break;
        case Symbol::Ma:
            require(a > 0.0 && a <= 2.0, "m_a exponent must be in (0, 2]");
            break;
        case Symbol::Bump:
            require(axis >= 0 && axis < n, "bump axis out of range");
            break;
    }
}

Complex MultiplierSpec::operator()(const Vector& xi) const {
    const double r = xi.norm();
    switch (family) {
        case Symbol::FracLaplacian:
            if (r == 0.0) return s == 0.0 ? 1.0 : 0.0;
            return std::pow(r, s);
        case Symbol::Riesz:
            if (r == 0.0) return 0.0;
            return Complex(0.0, xi(axis) / r);
        case Symbol::Derivative:
            return Complex(0.0, xi(axis));
        case Symbol::Heat:
            return std::exp(-t * r * r);
        case Symbol::Ma:
            if (r == 0.0) return 0.0;
            return std::pow(std::abs(xi(0)) / r, a);
        case Symbol::Bump:
            return bump_eval(bump, k, xi(axis));
    }
    return 0.0;
}

SpectralField apply_multiplier(const SpectralField& field, const MultiplierSpec& spec) {
    spec.validate(field.dim());
    SpectralField out = field;
    for (Index i = 0; i < field.size(); ++i) {
        const Complex m = spec(field.frequency(i));
        out.coefficients().col(i) *= m;
    }
    return out;
}

double torus_lp_norm(const SpectralField& field, double p) {
    const GridFunction g = field.to_grid();
    double cell = 1.0;
    for (int a = 0; a < g.dim(); ++a) cell *= g.step(a);
    const auto& shape = field.shape();
    Vector norms(field.size());
    for (Index i = 0; i < field.size(); ++i) norms(i) = g.target()(g.value(lattice_index(g, i, shape)));
    const double top = norms.maxCoeff();
    if (top == 0.0) return 0.0;
    if (std::isinf(p)) return top;
    return top * std::pow(cell * (norms / top).array().pow(p).sum(), 1.0 / p);
}

double sobolev_W1(const GridFunction& f, double p) {
    require(p >= 1.0, "sobolev_W1: p must be >= 1");
    const Vector w = trapezoid_weights(f);
    double total = 0.0;
    for (int a = 0; a < f.dim(); ++a) {
        const Matrix d = partial(f, a);
        Vector norms(d.cols());
        for (Index i = 0; i < d.cols(); ++i) norms(i) = f.target()(d.col(i));
        const double top = norms.maxCoeff();
        if (top == 0.0) continue;
        if (std::isinf(p)) {
            total += top;
            continue;
        }
        total += top * std::pow(w.dot((norms / top).array().pow(p).matrix()), 1.0 / p);
    }
    return total;
}

double sobolev_Wsp(const GridFunction& f, double s, double p, const WspOptions& options) {
    require(s > 0.0 && s < 1.0, "sobolev_Wsp: s must be in (0, 1)");
    require(p >= 1.0 && std::isfinite(p), "sobolev_Wsp: p must be in [1, ∞)");
    const int n = f.dim();
    const Index count = f.point_count();
    require(count <= 40000, "sobolev_Wsp: lattice too large for the pair sum");
    const Vector w = trapezoid_weights(f);
    const double gamma = p - 1.0 - p * s;  // exponent of |x − y| for locally affine f in 1-D
    std::vector<Vector> points(count);
    for (Index i = 0; i < count; ++i) points[i] = f.point(i);

    // cell-pair average of |x − y|^γ for 1-D neighbours at lattice distance k (exact on
    // uniform cells); far pairs use the point value
    constexpr int kNear = 8;
    const double h = f.step(0);
    auto second_difference = [&](int k) {
        const double e = gamma + 2.0;
        const double v = std::pow(k + 1.0, e) - 2.0 * std::pow(static_cast<double>(k), e) + std::pow(k - 1.0, e);
        return std::pow(h, gamma) * v / ((gamma + 1.0) * (gamma + 2.0));
    };

    double total = 0.0;
    for (Index i = 0; i < count; ++i) {
        double row = 0.0;
        for (Index j = i + 1; j < count; ++j) {
            const double diff = f.target()(f.value(j) - f.value(i));
            if (diff == 0.0) continue;
            const double dist = (points[j] - points[i]).norm();
            if (n == 1) {
                const int k = static_cast<int>(std::lround(dist / h));
                if (k <= kNear) {
                    row += w(j) * std::pow(diff / dist, p) * second_difference(k);
                    continue;
                }
            }
            row += w(j) * std::pow(diff, p) / std::pow(dist, n + p * s);
        }
        total += 2.0 * w(i) * row;
    }

    // the diagonal cells, with f replaced by its local linearization
    std::vector<Matrix> partials;
    for (int a = 0; a < n; ++a) partials.push_back(partial(f, a));
    if (n == 1) {
        for (Index i = 0; i < count; ++i) {
            const double g = f.target()(partials[0].col(i));
            const double c = w(i);
            total += std::pow(g, p) * 2.0 * std::pow(c, gamma + 2.0) / ((gamma + 1.0) * (gamma + 2.0));
        }
    } else {
        const int dirs = options.directions > 0 ? options.directions : (n == 2 ? 128 : 512);
        const auto [theta, dw] = sphere_rule(n, dirs);
        Matrix jac(f.target_dim(), n);
        for (Index i = 0; i < count; ++i) {
            for (int a = 0; a < n; ++a) jac.col(a) = partials[a].col(i);
            double sphere = 0.0;
            for (Index k = 0; k < theta.cols(); ++k) sphere += std::pow(f.target()(Vector(jac * theta.col(k))), p);
            sphere *= dw;
            const double radius = std::pow(w(i) / unit_ball_volume(n), 1.0 / n);
            total += w(i) * sphere * std::pow(radius, p * (1.0 - s)) / (p * (1.0 - s));
        }
    }

    if (options.whole_space) {
        // zero extension: 2 ∫_box ‖f(x)‖^p ∫_{y ∉ box} |x − y|^{−n−ps} dy dx
        const int dirs = options.directions > 0 ? options.directions : (n == 2 ? 256 : 512);
        const auto [theta, dw] = sphere_rule(n, dirs);
        const Box& box = f.box();
        for (Index i = 0; i < count; ++i) {
            const double value = f.target()(f.value(i));
            if (value == 0.0) continue;
            const Vector& x = points[i];
            const double floor = 0.5 * std::pow(w(i), 1.0 / n);
            double inner = 0.0;
            for (Index k = 0; k < theta.cols(); ++k) {
                double exit = kInf;
                for (int a = 0; a < n; ++a) {
                    const double d = theta(a, k);
                    if (d > 0) exit = std::min(exit, (box.upper(a) - x(a)) / d);
                    if (d < 0) exit = std::min(exit, (x(a) - box.lower(a)) / -d);
                }
                inner += std::pow(std::max(exit, floor), -p * s) / (p * s);
            }
            total += 2.0 * w(i) * std::pow(value, p) * inner * dw;
        }
    }
    return std::pow(total, 1.0 / p);
}

double riesz_Hsp(const GridFunction& f, double s, double p) {
    require(p >= 1.0, "riesz_Hsp: p must be >= 1");
    double top = 0.0;
    for (Index i = 0; i < f.point_count(); ++i) top = std::max(top, f.target()(f.value(i)));
    if (top == 0.0) return 0.0;
    for (Index i = 0; i < f.point_count(); ++i) {
        const Vector x = f.point(i);
        bool central = true;
        for (int a = 0; a < f.dim(); ++a) {
            const double len = f.box().upper(a) - f.box().lower(a);
            if (x(a) < f.box().lower(a) + 0.25 * len - 1e-12 * len ||
                x(a) > f.box().upper(a) - 0.25 * len + 1e-12 * len)
                central = false;
        }
        if (!central && f.target()(f.value(i)) > 1e-9 * top)
            throw DomainError("riesz_Hsp: support margin violated (f must vanish outside the central half of the box)");
    }
    MultiplierSpec spec;
    spec.family = Symbol::FracLaplacian;
    spec.s = s;
    return torus_lp_norm(apply_multiplier(SpectralField::from_grid(f), spec), p);
}

BetaIdentity beta_identity_check(double theta, double alpha) {
    require(theta > 0.0 && theta < 1.0, "beta identity: theta must be in (0, 1)");
    require(alpha >= 0.0 && std::isfinite(alpha), "beta identity: alpha must be >= 0");
    BetaIdentity out;
    out.lhs = std::pow(1.0 + alpha, -theta);
    // s = t^{1/θ} on [0, 1/2] and 1 − s = t^{1/(1−θ)} on [1/2, 1] remove both endpoint singularities
    auto left = [&](double t) {
        const double s = std::pow(t, 1.0 / theta);
        return std::pow(1.0 - s, -theta) / (1.0 + alpha * s) / theta;
    };
    auto right = [&](double t) {
        const double s = 1.0 - std::pow(t, 1.0 / (1.0 - theta));
        return std::pow(s, theta - 1.0) / (1.0 + alpha * s) / (1.0 - theta);
    };
    const double i1 = integrate_adaptive(left, 0.0, std::pow(0.5, theta), 1e-15);
    const double i2 = integrate_adaptive(right, 0.0, std::pow(0.5, 1.0 - theta), 1e-15);
    out.rhs = std::sin(kPi * theta) / kPi * (i1 + i2);
    return out;
}

SquareFunctionReport lp_randomized_square_function(const GridFunction& f, double p, int bands, int trials,
                                                   std::uint64_t seed, int first_band) {
    require(f.dim() == 1, "lp_randomized_square_function needs a 1-D field");
    require(p >= 1.0 && std::isfinite(p), "lp_randomized_square_function: p must be in [1, ∞)");
    require(bands >= 1 && bands <= 24, "band count must be in [1, 24]");
    require(trials >= 0, "trials must be >= 0");
    SquareFunctionReport report;
    const SpectralField field = SpectralField::from_grid(f);
    const int len = field.shape()[0];
    const double cell = f.step(0);
    std::vector<Matrix> parts;
    for (int j = 0; j < bands; ++j) {
        MultiplierSpec spec;
        spec.family = Symbol::Bump;
        spec.bump = BumpKind::Theta;
        spec.k = first_band + j;
        const GridFunction g = apply_multiplier(field, spec).to_grid();
        parts.push_back(g.values().leftCols(len));
    }
    auto lp_power = [&](const Matrix& values) {
        double acc = 0.0;
        for (Index i = 0; i < values.cols(); ++i) acc += std::pow(f.target()(values.col(i)), p);
        return acc * cell;
    };
    report.base_power = lp_power(f.values().leftCols(len));
    const std::uint64_t all = 1ULL << bands;
    report.exhaustive = trials == 0 || static_cast<std::uint64_t>(trials) >= all;
    const std::uint64_t patterns = report.exhaustive ? all : static_cast<std::uint64_t>(trials);
    Rng rng(seed);
    double acc = 0.0;
    Matrix sum(f.target_dim(), len);
    for (std::uint64_t code = 0; code < patterns; ++code) {
        sum.setZero();
        for (int j = 0; j < bands; ++j) {
            const bool plus = report.exhaustive ? ((code >> j) & 1ULL) : rng.sign() > 0;
            if (plus)
                sum += parts[j];
            else
                sum -= parts[j];
        }
        acc += lp_power(sum);
    }
    report.patterns = static_cast<int>(patterns);
    report.mean_power = acc / static_cast<double>(patterns);
    report.ratio = report.base_power > 0.0 ? report.mean_power / report.base_power : 0.0;
    return report;
}

}  // namespace afs
