#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "affinescope/dorronsoro.hpp"

using namespace afs;

namespace {

GridFunction scalar(const Box& box, int res, const std::function<double(const Vector&)>& fn) {
    return GridFunction::sample(box, res, TargetNorm{}, [&](const Vector& x) { return Vector::Constant(1, fn(x)); });
}

double hat(double x) { return std::max(0.0, 1.0 - std::abs(x)); }

double smooth_bump(double x) { return std::abs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0; }

// Dense L₂ defect of a scalar 1-D function on [x − u, x + u]: midpoint nodes, exact least squares.
double dense_defect(const std::function<double(double)>& fn, double x, double u, int nodes) {
    std::vector<double> t(nodes), v(nodes);
    double mean = 0.0, tt = 0.0, tv = 0.0;
    for (int i = 0; i < nodes; ++i) {
        t[i] = -1.0 + (i + 0.5) * 2.0 / nodes;
        v[i] = fn(x + u * t[i]);
        mean += v[i];
        tt += t[i] * t[i];
    }
    mean /= nodes;
    for (int i = 0; i < nodes; ++i) tv += t[i] * (v[i] - mean);
    const double slope = tv / tt;
    double acc = 0.0;
    for (int i = 0; i < nodes; ++i) {
        const double r = v[i] - mean - slope * t[i];
        acc += r * r;
    }
    return acc / nodes;
}

// Compactly supported seeded Lipschitz field: cutoff × random trigonometric sum.
GridFunction random_field(int n, std::uint64_t seed) {
    Rng rng(seed);
    const int terms = 4;
    Matrix freq(n, terms);
    Vector phase(terms), amp(terms);
    for (int k = 0; k < terms; ++k) {
        for (int a = 0; a < n; ++a) freq(a, k) = rng.uniform(-6.0, 6.0);
        phase(k) = rng.uniform(0.0, 2 * kPi);
        amp(k) = rng.uniform(-1.0, 1.0) / terms;
    }
    const int res = n == 1 ? 513 : 49;
    return scalar(Box::cube(n, -2.0, 2.0), res, [&](const Vector& x) {
        double s = 0.0;
        for (int k = 0; k < terms; ++k) s += amp(k) * std::sin(freq.col(k).dot(x) + phase(k));
        return s * std::max(0.0, 1.0 - x.norm());
    });
}

}  // namespace

TEST_CASE("local_defect examples") {
    const Box box = Box::cube(2, -2.0, 2.0);
    const GridFunction affine = scalar(box, 9, [](const Vector& x) { return 1.5 - 2 * x(0) + 0.25 * x(1); });
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        Vector x(2);
        x << rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5);
        CHECK(local_defect(affine, x, rng.uniform(0.1, 1.4), 2.0) < 1e-8);
    }
    // |x| on [−1, 1]: P¹ is the constant 1/2 and the mean square residual is 1/12
    const GridFunction tent = scalar(Box::cube(1, -2.0, 2.0), 257, [](const Vector& x) { return std::abs(x(0)); });
    CHECK(local_defect(tent, Vector::Zero(1), 1.0, 2.0) == doctest::Approx(1.0 / 12).epsilon(1e-9));
    CHECK(local_defect(tent, Vector::Zero(1), 1.0, 2.0) ==
          doctest::Approx(dense_defect([](double t) { return std::abs(t); }, 0.0, 1.0, 20000)).epsilon(1e-6));
    for (double p : {1.0, 2.0, 3.5})
        for (double u : {0.3, 0.9}) CHECK(local_defect(tent, Vector::Constant(1, 0.2), u, p) <= std::pow(2 * u, p));
    CHECK_THROWS_AS(local_defect(tent, Vector::Constant(1, 1.5), 1.0, 2.0), DomainError);
}

TEST_CASE("dyadic log grid") {
    const auto [u, w] = dyadic_log_grid(1.0 / 32, 1.0, 8);
    CHECK(u.size() == 41);
    CHECK(u.front() == 1.0 / 32);
    CHECK(u.back() == 1.0);
    double total = 0.0;
    for (double x : w) total += x;
    CHECK(total == doctest::Approx(std::log(32.0)).epsilon(1e-14));
    CHECK_THROWS_AS(dyadic_log_grid(1.0, 1.01, 8), ValidationError);
}

TEST_CASE("dorronsoro_lhs vanishes on zero and affine inputs") {
    const GridFunction zero = scalar(Box::cube(1, -4.0, 4.0), 129, [](const Vector&) { return 0.0; });
    CHECK(dorronsoro_lhs(zero, {}) == 0.0);
    const DorronsoroReport r = dorronsoro_ratio_report(zero, 2.0, {});
    CHECK(r.lhs == 0.0);
    CHECK(r.ratio == 0.0);

    for (int n : {1, 2}) {
        const GridFunction affine = scalar(Box::cube(n, -4.0, 4.0), n == 1 ? 257 : 33, [](const Vector& x) { return 0.5 + x.sum(); });
        DorronsoroParams params;
        params.window = Box::cube(n, -1.0, 1.0);
        params.u_min = 0.1;
        params.u_max = 1.0;
        params.directions = 512;
        CHECK(dorronsoro_lhs(affine, params) < 1e-8);
        params.window.reset();
        CHECK_THROWS_AS(dorronsoro_lhs(affine, params), DomainError);
    }
}

TEST_CASE("dorronsoro_lhs matches a dense direct sum for the hat function") {
    const GridFunction f = scalar(Box::cube(1, -4.0, 4.0), 1025, [](const Vector& x) { return hat(x(0)); });
    DorronsoroParams params;
    params.u_min = 1.0 / 32;
    params.u_max = 1.0;
    params.centers = 2;
    const double lhs = dorronsoro_lhs(f, params);

    // midpoint in x over the whole region where the defect can be nonzero, midpoint in log u
    const int xs = 840, logs = 80, ys = 400;
    const double a = -2.05, b = 2.05, la = std::log(1.0 / 32), lb = 0.0;
    double acc = 0.0;
    for (int j = 0; j < logs; ++j) {
        const double u = std::exp(la + (j + 0.5) * (lb - la) / logs);
        double inner = 0.0;
        for (int i = 0; i < xs; ++i) inner += dense_defect(hat, a + (i + 0.5) * (b - a) / xs, u, ys);
        acc += inner * (b - a) / xs / (u * u) * (lb - la) / logs;
    }
    CHECK(lhs == doctest::Approx(std::sqrt(acc)).epsilon(0.02));
}

TEST_CASE("dilation covariance and truncation monotonicity") {
    auto bump = [](double scale) {
        const double half = 4.0 / scale;
        return scalar(Box::cube(1, -half, half), 1025, [scale](const Vector& x) { return smooth_bump(scale * x(0)) * (1 + 0.3 * x(0) * scale); });
    };
    DorronsoroParams params;
    params.u_min = 1.0 / 32;
    params.u_max = 1.0;
    const double base = dorronsoro_lhs(bump(1.0), params);
    DorronsoroParams half = params;
    half.u_min /= 2;
    half.u_max /= 2;
    const double dilated = dorronsoro_lhs(bump(2.0), half);
    CHECK(dilated == doctest::Approx(std::pow(2.0, 1.0 - 0.5) * base).epsilon(0.02));

    DorronsoroParams wider = params;
    wider.u_min = 1.0 / 64;
    const double more = dorronsoro_lhs(bump(1.0), wider);
    CHECK(more >= base);
    DorronsoroParams threaded = params;
    threaded.threads = 3;
    CHECK(dorronsoro_lhs(bump(1.0), threaded) == base);
}

TEST_CASE("ratio report is stable under quadrature doubling") {
    const GridFunction f = scalar(Box::cube(1, -4.0, 4.0), 513, [](const Vector& x) { return smooth_bump(x(0)); });
    DorronsoroParams coarse;
    coarse.directions = 512;
    const DorronsoroReport a = dorronsoro_ratio_report(f, 2.0, coarse, 0.5);
    DorronsoroParams fine = coarse;
    fine.centers = 2;
    fine.directions = 1024;
    fine.points_per_octave = 16;
    const DorronsoroReport b = dorronsoro_ratio_report(f, 2.0, fine, 0.5);
    CHECK(a.ratio > 0.0);
    CHECK(std::isfinite(a.ratio));
    CHECK(b.ratio == doctest::Approx(a.ratio).epsilon(0.1));
    REQUIRE(a.ratio_hsp.has_value());
    CHECK(*b.ratio_hsp == doctest::Approx(*a.ratio_hsp).epsilon(0.1));
    CHECK(a.boundary_low >= 0.0);
    CHECK(a.boundary_high <= 1.0);
}

TEST_CASE("lemma n+q") {
    const GridFunction zero = scalar(Box::cube(1, -2.0, 2.0), 65, [](const Vector&) { return 0.0; });
    const LemmaNq z = lemma_nq_check(zero, Vector::Zero(1), 2.0, 1.0);
    CHECK(z.lhs == 0.0);
    CHECK(z.rhs == 0.0);
    const GridFunction constant = scalar(Box::cube(1, -2.0, 2.0), 65, [](const Vector&) { return 1.0; });
    CHECK_THROWS_AS(lemma_nq_check(constant, Vector::Zero(1), 2.0, 1.0), DomainError);

    const GridFunction tent = scalar(Box::cube(1, -2.0, 2.0), 513, [](const Vector& x) { return hat(x(0)); });
    const LemmaNq t = lemma_nq_check(tent, Vector::Constant(1, 0.3), 2.0, 1.0);
    CHECK(t.lhs > 0.0);
    CHECK(t.lhs <= t.rhs);
    const GridFunction bump = scalar(Box::cube(1, -2.0, 2.0), 513, [](const Vector& x) { return smooth_bump(x(0)); });
    const LemmaNq b = lemma_nq_check(bump, Vector::Constant(1, -0.2), 1.0, 0.5);
    CHECK(b.lhs > 0.0);
    CHECK(b.lhs <= b.rhs);

    // rhs of the hat at x = 0, p = 2, q = 1: 2 · 2^2/2 · [∫₀¹ r²/r² dr + ∫₁^∞ 1/r² dr] = 8
    const LemmaNq at0 = lemma_nq_check(tent, Vector::Zero(1), 2.0, 1.0);
    CHECK(at0.rhs == doctest::Approx(8.0).epsilon(1e-4));

    int violations = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const int n = seed % 2 == 0 ? 1 : 2;
        const GridFunction f = random_field(n, seed);
        DorronsoroParams params;
        params.directions = n == 1 ? 512 : 1024;
        const Vector x = Vector::Constant(n, 0.1 * static_cast<double>(seed % 5) - 0.2);
        const LemmaNq r = lemma_nq_check(f, x, seed % 3 == 0 ? 1.0 : 2.0, 0.5, params);
        if (r.lhs > r.rhs * (1 + 1e-9)) ++violations;
    }
    CHECK(violations == 0);
}
