#include "affinescope/quadrature.hpp"

#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

namespace afs {

GaussRule gauss_legendre(int order) {
    require(order >= 1, "gauss_legendre: order must be >= 1");
    GaussRule rule;
    rule.nodes.assign(order, 0.0);
    rule.weights.assign(order, 0.0);
    // Legendre P_order and its derivative at x
    auto legendre = [order](double x, double& deriv) {
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= order; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        if (order == 1) p0 = 1.0;
        deriv = order * (x * p1 - p0) / (x * x - 1.0);
        return p1;
    };
    for (int i = 0; i < order / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            const double dx = legendre(x, dp) / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        legendre(x, dp);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    if (order % 2 == 1) {
        double dp = 0.0;
        legendre(0.0, dp);
        rule.weights[order / 2] = order == 1 ? 2.0 : 2.0 / (dp * dp);
    }
    return rule;
}

GaussRule composite_gauss(double a, double b, int panels, int order) {
    require(panels >= 1, "composite_gauss: panels must be >= 1");
    const GaussRule base = gauss_legendre(order);
    GaussRule rule;
    const double h = (b - a) / panels;
    for (int k = 0; k < panels; ++k) {
        const double mid = a + (k + 0.5) * h;
        for (int i = 0; i < order; ++i) {
            rule.nodes.push_back(mid + 0.5 * h * base.nodes[i]);
            rule.weights.push_back(0.5 * h * base.weights[i]);
        }
    }
    return rule;
}

double radical_inverse(std::uint64_t i, int base) {
    double inv = 1.0 / base;
    double f = inv;
    double out = 0.0;
    while (i > 0) {
        out += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return out;
}

double inverse_normal_cdf(double u) {
    // Acklam's rational approximation followed by one Halley step
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01,  -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    require(u > 0.0 && u < 1.0, "inverse_normal_cdf: argument must be in (0, 1)");
    constexpr double low = 0.02425;
    double x;
    if (u < low) {
        const double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (u > 1.0 - low) {
        const double q = std::sqrt(-2.0 * std::log1p(-u));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = u - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - u;
    const double g = e * std::sqrt(2.0 * kPi) * std::exp(0.5 * x * x);
    return x - g / (1.0 + 0.5 * x * g);
}

namespace {

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

struct RuleBuilder {
    std::vector<Vector> nodes;
    std::vector<double> weights;

    void add(Vector z, double w) {
        nodes.push_back(std::move(z));
        weights.push_back(w);
    }

    BallRule finish(int n) {
        BallRule rule;
        const Index count = static_cast<Index>(nodes.size());
        rule.nodes.resize(n, count);
        rule.weights.resize(count);
        double total = 0.0;
        for (double w : weights) total += w;
        for (Index i = 0; i < count; ++i) {
            rule.nodes.col(i) = nodes[i];
            rule.weights(i) = weights[i] / total;
        }
        const Matrix moment = rule.nodes * rule.weights.asDiagonal() * rule.nodes.transpose();
        rule.moment_inverse = moment.inverse();
        return rule;
    }
};

BallRule interval_rule(const NormSpec& norm, int count) {
    const double extent = 1.0 / norm_eval(norm, Vector::Ones(1));
    const int panels = std::max(1, count / 8);
    const GaussRule g = composite_gauss(-extent, extent, panels);
    RuleBuilder b;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) b.add(Vector::Constant(1, g.nodes[i]), g.weights[i]);
    for (int k = 0; k <= panels; ++k)
        b.add(Vector::Constant(1, -extent + 2.0 * extent * k / panels), 0.0);
    return b.finish(1);
}

BallRule polar_rule(const NormSpec& norm, int count) {
    const int panels = std::max(1, static_cast<int>(std::lround(std::sqrt(count / 2.0) / 8.0)));
    const int radial = 8 * panels;
    // angular panels are whole sub-sectors of the eight octants so that the kinks of ℓ₁ and
    // ℓ_∞ balls sit on panel boundaries
    const int sectors = 8 * std::max(1, static_cast<int>(std::lround(static_cast<double>(count) / radial / 64.0)));
    const GaussRule g = composite_gauss(0.0, 1.0, panels);
    const GaussRule angles = composite_gauss(0.0, 2.0 * kPi, sectors);
    RuleBuilder b;
    b.add(Vector::Zero(2), 0.0);
    for (std::size_t j = 0; j < angles.nodes.size(); ++j) {
        const double theta = angles.nodes[j];
        Vector dir(2);
        dir << std::cos(theta), std::sin(theta);
        const double reach = 1.0 / norm_eval(norm, dir);
        for (std::size_t k = 0; k < g.nodes.size(); ++k) {
            const double t = g.nodes[k];
            b.add(dir * (reach * t), angles.weights[j] * g.weights[k] * t * reach * reach);
        }
        b.add(dir * reach, 0.0);
    }
    for (int k = 0; k < sectors; ++k) {
        const double theta = 2.0 * kPi * k / sectors;
        Vector dir(2);
        dir << std::cos(theta), std::sin(theta);
        b.add(dir / norm_eval(norm, dir), 0.0);
    }
    return b.finish(2);
}

BallRule halton_rule(const NormSpec& norm, int count, std::uint64_t seed) {
    const int n = norm.dim;
    require(n + 1 <= static_cast<int>(std::size(kPrimes)), "ball rules support n <= 11");
    Rng rng(derive_seed(seed, 0x4a17));
    std::vector<double> shift(n + 1);
    for (auto& s : shift) s = rng.uniform();
    const double outer = 1.0 / euclid_sandwich(norm).c_low;
    const bool euclidean = norm.is_euclidean() && norm.scale == 1.0;
    RuleBuilder b;
    const int pairs = std::max(1, count / 2);
    Vector g(n);
    for (std::uint64_t i = 1; static_cast<int>(b.nodes.size()) < 2 * pairs; ++i) {
        double u[16];
        for (int d = 0; d <= n; ++d) {
            double v = radical_inverse(i, kPrimes[d]) + shift[d];
            v -= std::floor(v);
            u[d] = std::clamp(v, 0x1.0p-60, 1.0 - 0x1.0p-53);
        }
        for (int d = 0; d < n; ++d) g(d) = inverse_normal_cdf(u[d]);
        const double len = g.norm();
        if (len == 0.0) continue;
        const Vector z = g * (outer * std::pow(u[n], 1.0 / n) / len);
        if (!euclidean && norm_eval(norm, z) > 1.0) continue;
        b.add(z, 1.0);
        b.add(-z, 1.0);
    }
    return b.finish(n);
}

std::string rule_key(const NormSpec& norm, int count, std::uint64_t seed) {
    std::ostringstream key;
    key.precision(17);
    key << static_cast<int>(norm.kind) << '|' << norm.dim << '|' << norm.p << '|' << norm.scale << '|'
        << count << '|' << seed;
    if (norm.kind == NormKind::Ellipsoid)
        for (Index i = 0; i < norm.matrix.size(); ++i) key << '|' << norm.matrix.data()[i];
    return key.str();
}

}  // namespace

BallRule make_ball_rule(const NormSpec& norm, int count, std::uint64_t seed) {
    norm.validate();
    require(count >= 8, "ball rule needs at least 8 nodes");
    if (norm.dim == 1) return interval_rule(norm, count);
    if (norm.dim == 2) return polar_rule(norm, count);
    return halton_rule(norm, count, seed);
}

const BallRule& ball_rule(const NormSpec& norm, int count, std::uint64_t seed) {
    static std::mutex mutex;
    static std::map<std::string, std::unique_ptr<BallRule>> cache;
    const std::string key = rule_key(norm, count, seed);
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, std::make_unique<BallRule>(make_ball_rule(norm, count, seed))).first;
    return *it->second;
}

const BallRule& euclidean_rule(int n, int count, std::uint64_t seed) {
    return ball_rule(NormSpec::euclidean(n), count, seed);
}

const BallRule& validation_rule(const NormSpec& norm) {
    return ball_rule(norm, 4 * kDefaultBallNodes, 0x7e57);
}

Matrix sample_on_rule(const GridFunction& f, const Vector& center, double radius,
                      const NormSpec& norm, const BallRule& rule) {
    const int n = f.dim();
    require(center.size() == n && rule.dim() == n && norm.dim == n,
            "sample_on_rule: dimension mismatch between grid, center and rule");
    Vector extent(n);
    for (int a = 0; a < n; ++a) extent(a) = radius * axis_extent(norm, a);
    if (!f.contains_box(center, extent)) {
        std::ostringstream msg;
        msg << "ball of radius " << radius << " at (" << center.transpose()
            << ") leaves the sampled box of the grid function";
        throw DomainError(msg.str());
    }
    Matrix values(f.target_dim(), rule.size());
    Vector x(n);
    for (Index i = 0; i < rule.size(); ++i) {
        x = center + radius * rule.nodes.col(i);
        f.eval_into(x.data(), values.col(i).data());
    }
    return values;
}

namespace {

struct KronrodResult {
    double value;
    double error;
};

KronrodResult kronrod15(const std::function<double(double)>& fn, double a, double b) {
    static const double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                  0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                  0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                  0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
    static const double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                  0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                  0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                  0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    static const double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                 0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = fn(c);
    double kronrod = fc * wgk[7];
    double gauss = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * xgk[j];
        const double f1 = fn(c - dx);
        const double f2 = fn(c + dx);
        kronrod += wgk[j] * (f1 + f2);
        if (j % 2 == 1) gauss += wg[j / 2] * (f1 + f2);
    }
    return {kronrod * h, std::abs((kronrod - gauss) * h)};
}

double adapt(const std::function<double(double)>& fn, double a, double b, double tol, int depth,
             const KronrodResult& whole) {
    // below ~50 ulp of the panel value the Gauss/Kronrod difference is round-off, not truncation
    const double floor = 50 * std::numeric_limits<double>::epsilon() * std::abs(whole.value);
    if (whole.error <= std::max(tol, floor) || std::abs(b - a) < 1e-15 * std::max(1.0, std::abs(a))) return whole.value;
    if (depth == 0)
        throw NumericalError("adaptive quadrature did not converge on [" + std::to_string(a) + ", " +
                             std::to_string(b) + "]");
    const double m = 0.5 * (a + b);
    const KronrodResult left = kronrod15(fn, a, m);
    const KronrodResult right = kronrod15(fn, m, b);
    return adapt(fn, a, m, 0.5 * tol, depth - 1, left) + adapt(fn, m, b, 0.5 * tol, depth - 1, right);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& fn, double a, double b, double tol,
                          int max_depth) {
    return adapt(fn, a, b, tol, max_depth, kronrod15(fn, a, b));
}

std::pair<Matrix, double> sphere_rule(int n, int count) {
    require(n >= 1 && n <= 8, "sphere_rule: dimension must be in [1, 8]");
    require(count >= 1, "sphere_rule: count must be >= 1");
    if (n == 1) {
        Matrix d(1, 2);
        d << 1.0, -1.0;
        return {d, 1.0};
    }
    Matrix d(n, count);
    if (n == 2) {
        for (int k = 0; k < count; ++k) {
            const double t = 2.0 * kPi * (k + 0.5) / count;
            d(0, k) = std::cos(t);
            d(1, k) = std::sin(t);
        }
    } else {
        static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19};
        for (int k = 0; k < count; ++k) {
            Vector g(n);
            for (int a = 0; a < n; ++a) g(a) = inverse_normal_cdf(radical_inverse(k + 1, kPrimes[a]));
            d.col(k) = g.normalized();
        }
    }
    return {d, unit_sphere_area(n) / count};
}

}  // namespace afs
