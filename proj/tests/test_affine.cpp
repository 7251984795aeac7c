#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "affinescope/affine.hpp"

using namespace afs;

namespace {

double tent(double x) {
    const double r = std::fmod(std::abs(x), 2.0);
    return r <= 1.0 ? r : 2.0 - r;
}

GridFunction scalar_1d(double lo, double hi, int res, double (*fn)(double)) {
    return GridFunction::sample(Box::cube(1, lo, hi), res, TargetNorm{},
                                [fn](const Vector& x) { return Vector::Constant(1, fn(x(0))); });
}

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

// Midpoint sum of fn over [a, b]; the reference quadrature for 1-D oracles.
double midpoint(double a, double b, int cells, const std::function<double(double)>& fn) {
    const double h = (b - a) / cells;
    double acc = 0.0;
    for (int i = 0; i < cells; ++i) acc += fn(a + (i + 0.5) * h);
    return acc * h;
}

}  // namespace

TEST_CASE("gauss_legendre integrates polynomials exactly") {
    for (int order : {1, 2, 5, 8}) {
        const GaussRule g = gauss_legendre(order);
        for (int k = 0; k < 2 * order; ++k) {
            double acc = 0.0;
            for (int i = 0; i < order; ++i) acc += g.weights[i] * std::pow(g.nodes[i], k);
            const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
            CHECK(acc == doctest::Approx(exact).epsilon(1e-13).scale(1.0));
        }
    }
}

TEST_CASE("inverse normal cdf and adaptive integration") {
    for (double u : {1e-10, 0.01, 0.3, 0.5, 0.77, 0.999}) {
        const double x = inverse_normal_cdf(u);
        CHECK(0.5 * std::erfc(-x / std::sqrt(2.0)) == doctest::Approx(u).epsilon(1e-13));
    }
    CHECK(integrate_adaptive([](double t) { return std::exp(t); }, 0.0, 1.0) ==
          doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
}

TEST_CASE("ball rules are normalized with the Euclidean second moment") {
    for (int n : {1, 2, 3}) {
        const BallRule& rule = euclidean_rule(n);
        CHECK(rule.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(rule.weights.minCoeff() >= 0.0);
        CHECK((rule.nodes * rule.weights).norm() < 1e-14);
        const Matrix moment = rule.nodes * rule.weights.asDiagonal() * rule.nodes.transpose();
        const double tol = n <= 2 ? 1e-12 : 2e-3;
        CHECK((moment - Matrix::Identity(n, n) / (n + 2.0)).cwiseAbs().maxCoeff() < tol);
        for (Index i = 0; i < rule.size(); ++i) CHECK(rule.nodes.col(i).norm() <= 1.0 + 1e-12);
    }
    const BallRule& cube = ball_rule(NormSpec::lp(2, kInf));
    // uniform measure on [-1,1]²: E z₁² = 1/3
    const Matrix moment = cube.nodes * cube.weights.asDiagonal() * cube.nodes.transpose();
    CHECK(moment(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("mean_P0 examples") {
    const auto constant = GridFunction::sample(Box::cube(2, -2, 2), 9, TargetNorm{2, 2.0},
                                               [](const Vector&) { return vec({1.5, -2.0}); });
    CHECK((mean_P0(constant, vec({0.3, -0.4}), 1.0) - vec({1.5, -2.0})).norm() < 1e-13);

    const auto saw = scalar_1d(-1, 1, 257, tent);
    CHECK(mean_P0(saw, vec({0.0}), 1.0)(0) == doctest::Approx(0.5).epsilon(1e-13));

    const auto linear = GridFunction::sample(Box::cube(2, -3, 3), 13, TargetNorm{},
                                             [](const Vector& x) { return Vector::Constant(1, x(0)); });
    for (const Vector& c : {vec({0.0, 0.0}), vec({0.7, -1.1}), vec({-1.5, 0.5})})
        CHECK(mean_P0(linear, c, 1.2)(0) == doctest::Approx(c(0)).epsilon(1e-12));
    CHECK_THROWS_AS(mean_P0(linear, vec({2.5, 0.0}), 1.0), DomainError);
}

TEST_CASE("linear_T examples") {
    Matrix a(2, 2);
    a << 1.0, -2.0, 0.5, 3.0;
    const auto f = GridFunction::sample(Box::cube(2, -2, 2), 9, TargetNorm{2, 2.0},
                                        [&](const Vector& x) { return Vector(a * x); });
    CHECK((linear_T(f, vec({0.2, 0.1}), 0.8) - a).cwiseAbs().maxCoeff() < 1e-12);

    const auto constant = GridFunction::sample(Box::cube(1, -2, 2), 9, TargetNorm{},
                                               [](const Vector&) { return Vector::Constant(1, 4.0); });
    CHECK(linear_T(constant, vec({0.0}), 1.0).norm() < 1e-13);

    // oracle: (3/2) ∫_{-1}^{1} z φ(z) dz
    const double oracle = 1.5 * midpoint(-1, 1, 200000, [](double z) { return z * tent(z); });
    const auto saw = scalar_1d(-1, 1, 257, tent);
    CHECK(linear_T(saw, vec({0.0}), 1.0)(0, 0) == doctest::Approx(oracle).scale(1.0).epsilon(1e-12));
}

TEST_CASE("legendre_P1 reproduces affine maps and matches least squares") {
    Rng rng(1);
    for (int n : {1, 2, 3}) {
        for (int trial = 0; trial < 5; ++trial) {
            AffineMap lam{Vector(2), Matrix(2, n)};
            for (int j = 0; j < 2; ++j) {
                lam.intercept(j) = rng.normal();
                for (int i = 0; i < n; ++i) lam.linear(j, i) = rng.normal();
            }
            const auto f = GridFunction::sample(Box::cube(n, -2, 2), n == 3 ? 5 : 9, TargetNorm{2, 2.0},
                                                [&](const Vector& x) { return lam(x); });
            Vector c(n);
            for (int i = 0; i < n; ++i) c(i) = rng.uniform(-0.5, 0.5);
            const AffineMap p1 = legendre_P1(f, c, 1.0);
            CHECK((p1.intercept - lam.intercept).norm() <= 1e-10 * lam.intercept.norm() + 1e-12);
            CHECK((p1.linear - lam.linear).norm() <= 1e-10 * lam.linear.norm());
        }
    }

    const auto saw = scalar_1d(-1, 1, 257, tent);
    const AffineMap half = legendre_P1(saw, vec({0.0}), 1.0);
    CHECK(half.intercept(0) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(std::abs(half.linear(0, 0)) < 1e-13);

    const auto square = scalar_1d(-1, 1, 4097, [](double x) { return x * x; });
    const AffineMap sq = legendre_P1(square, vec({0.0}), 1.0);
    CHECK(sq.intercept(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(std::abs(sq.linear(0, 0)) < 1e-13);

    const Ball ball{vec({0.0}), 1.0, NormSpec::euclidean(1)};
    const FitReport ls = best_affine(square, ball, 2.0);
    CHECK(ls.map.intercept(0) == doctest::Approx(sq.intercept(0)).epsilon(1e-12));
    CHECK(ls.map.linear(0, 0) == doctest::Approx(sq.linear(0, 0)).scale(1.0).epsilon(1e-12));
}

TEST_CASE("legendre_P1 scale covariance under dilation") {
    auto field = [](const Vector& x) { return Vector::Constant(1, std::sin(2 * x(0)) + x(1) * x(1)); };
    const double lambda = 2.0;
    const auto f = GridFunction::sample(Box::cube(2, -4, 4), 161, TargetNorm{}, field);
    const auto g = GridFunction::sample(Box::cube(2, -2, 2), 161, TargetNorm{},
                                        [&](const Vector& x) { return field(Vector(lambda * x)); });
    const Vector x = vec({0.3, -0.2});
    const AffineMap pg = legendre_P1(g, x, 0.5);
    const AffineMap pf = legendre_P1(f, Vector(lambda * x), lambda * 0.5);
    // P¹g(y) = P¹f(λ y)
    CHECK(pg.intercept(0) == doctest::Approx(pf.intercept(0)).epsilon(1e-12));
    CHECK((pg.linear - lambda * pf.linear).norm() < 1e-12);
}

TEST_CASE("best_affine reproduces affine data for every p") {
    const auto f = GridFunction::sample(Box::cube(2, -2, 2), 9, TargetNorm{2, 3.0},
                                        [](const Vector& x) { return vec({1 + x(0) - 2 * x(1), 0.5 * x(1)}); });
    for (double p : {1.0, 1.5, 2.0, 4.0, kInf}) {
        const FitReport r = best_affine(f, Ball{vec({0.1, 0.2}), 1.0, NormSpec::lp(2, 3.0)}, p);
        CHECK(r.error < 1e-9);
    }
}

TEST_CASE("best_affine p=inf on |x| agrees with a brute force search") {
    const auto f = scalar_1d(-1, 1, 257, [](double x) { return std::abs(x); });
    const FitReport r = best_affine(f, Ball{vec({0.0}), 1.0, NormSpec::euclidean(1)}, kInf);
    // oracle: sup error over a dense intercept/slope grid, evaluated on 2001 points
    double oracle = kInf;
    for (int ia = 0; ia <= 200; ++ia) {
        for (int ib = -50; ib <= 50; ++ib) {
            const double a = ia / 200.0;
            const double b = ib / 100.0;
            double worst = 0.0;
            for (int k = 0; k <= 2000; ++k) {
                const double x = -1.0 + k / 1000.0;
                worst = std::max(worst, std::abs(std::abs(x) - a - b * x));
            }
            oracle = std::min(oracle, worst);
        }
    }
    CHECK(oracle == doctest::Approx(0.5));
    CHECK(r.error == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(r.map.intercept(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(r.map.linear(0, 0)) < 1e-12);
}

TEST_CASE("best_affine p=2 on the tent") {
    const auto saw = scalar_1d(-1, 1, 257, tent);
    const FitReport r = best_affine(saw, Ball{vec({0.0}), 1.0, NormSpec::euclidean(1)}, 2.0);
    // oracle: (∫(φ − 1/2)² dx / 2)^{1/2}
    const double oracle = std::sqrt(0.5 * midpoint(-1, 1, 200000, [](double x) {
        return (tent(x) - 0.5) * (tent(x) - 0.5);
    }));
    CHECK(oracle == doctest::Approx(1.0 / (2.0 * std::sqrt(3.0))).epsilon(1e-9));
    CHECK(r.error == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("IRLS fits beat a coarse brute force and the Legendre competitor") {
    const auto f = scalar_1d(-1, 1, 513, [](double x) { return std::exp(x) + std::abs(x - 0.3); });
    const Ball ball{vec({0.0}), 1.0, NormSpec::euclidean(1)};
    const BallRule& rule = euclidean_rule(1);
    const Matrix values = sample_on_rule(f, ball.center, 1.0, ball.norm, rule);
    for (double p : {1.0, 1.5, 3.0, 4.0, kInf}) {
        const FitReport r = best_affine(f, ball, p);
        double brute = kInf;
        for (int ia = 0; ia <= 120; ++ia) {
            for (int ib = 0; ib <= 120; ++ib) {
                const AffineMap lam{Vector::Constant(1, 0.8 + ia * 0.01), Matrix::Constant(1, 1, 0.6 + ib * 0.01)};
                brute = std::min(brute, rule_lp_norm(values - lam.on_rule(ball.center, 1.0, rule), rule, TargetNorm{}, p));
            }
        }
        CHECK(r.error <= brute + 1e-9);
        const AffineMap p1 = legendre_P1(f, ball.center, 1.0);
        CHECK(r.error <= rule_lp_norm(values - p1.on_rule(ball.center, 1.0, rule), rule, TargetNorm{}, p) + 1e-12);
    }
}

TEST_CASE("vector minimax fit certifies its gap") {
    const auto f = GridFunction::sample(Box::cube(1, -1, 1), 257, TargetNorm{2, 2.0}, [](const Vector& x) {
        return vec({tent(2 * x(0)) / 2, std::abs(x(0))});
    });
    const FitReport r = best_affine(f, Ball{vec({0.0}), 1.0, NormSpec::euclidean(1)}, kInf);
    CHECK(r.error > 0.0);
    CHECK(r.gap >= 0.0);
    CHECK(r.gap <= 1e-3 * r.error);
}

TEST_CASE("op_norm examples") {
    const TargetNorm l2{2, 2.0};
    CHECK(op_norm(Matrix::Identity(2, 2), NormSpec::euclidean(2), l2).value == doctest::Approx(1.0));
    Matrix d(2, 2);
    d << 2, 0, 0, 3;
    CHECK(op_norm(d, NormSpec::euclidean(2), l2).value == doctest::Approx(3.0));
    Matrix row(1, 2);
    row << 1, 1;
    // oracle: |w₁ + w₂| over a dense sampling of the ℓ₁ unit sphere
    double oracle = 0.0;
    for (int k = 0; k < 4000; ++k) {
        const double t = -1.0 + k / 1000.0;
        const double w1 = t <= 1.0 ? t : 2.0 - t;
        for (double s : {1.0, -1.0}) oracle = std::max(oracle, std::abs(w1 + s * (1 - std::abs(w1))));
    }
    CHECK(op_norm(row, NormSpec::lp(2, 1.0), TargetNorm{1, 2.0}).value == doctest::Approx(oracle));

    Matrix t(3, 2);
    t << 1, 2, -1, 0.5, 0.3, -2;
    const TargetNorm l3{3, 3.0};
    const OpNorm sampled = op_norm(t, NormSpec::lp(2, 1.5), l3, 4, 4096);
    CHECK_FALSE(sampled.exact);
    double dense = 0.0;
    for (int k = 0; k < 200000; ++k) {
        const double th = 2 * kPi * k / 200000;
        Vector w(2);
        w << std::cos(th), std::sin(th);
        dense = std::max(dense, l3(Vector(t * w)) / norm_eval(NormSpec::lp(2, 1.5), w));
    }
    CHECK(sampled.value <= dense * (1 + 1e-9));
    CHECK(sampled.value >= dense * (1 - 1e-6));
}

TEST_CASE("T_u is bounded by the Lipschitz constant") {
    Rng rng(21);
    for (const auto& spec : {NormSpec::lp(2, 1.0), NormSpec::euclidean(2), NormSpec::lp(2, kInf)}) {
        for (int trial = 0; trial < 5; ++trial) {
            Matrix coef = Matrix::NullaryExpr(2, 6, [&]() { return rng.normal(); });
            const auto f = GridFunction::sample(Box::cube(2, -1.5, 1.5), 49, TargetNorm{2, 2.0}, [&](const Vector& x) {
                Vector out(2);
                for (int j = 0; j < 2; ++j)
                    out(j) = std::abs(coef(j, 0) * x(0) + coef(j, 1) * x(1) + coef(j, 2)) +
                             coef(j, 3) * std::max(x(0), x(1)) + coef(j, 4) * x(1);
                return out;
            });
            const double lip = lipschitz_estimate(f, spec);
            const Matrix t = linear_T(f, vec({rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)}), 1.0);
            CHECK(op_norm(t, spec, f.target()).value <= 1.05 * lip);
        }
    }
}

TEST_CASE("quasi_opt_ratio conventions and the proof chain") {
    const Ball ball1{vec({0.0}), 1.0, NormSpec::euclidean(1)};
    const auto affine = scalar_1d(-1, 1, 33, [](double x) { return 2 * x - 1; });
    CHECK(quasi_opt_ratio(affine, ball1, 3.0) == 1.0);
    const auto saw = scalar_1d(-1, 1, 257, tent);
    CHECK(quasi_opt_ratio(saw, ball1, 2.0) == doctest::Approx(1.0).epsilon(1e-12));

    Rng rng(8);
    const Matrix noise = Matrix::NullaryExpr(1, 17 * 17, [&]() { return rng.uniform(-1, 1); });
    const GridFunction f(Box::cube(2, -1, 1), {17, 17}, TargetNorm{}, noise);
    const Ball ball2{vec({0.0, 0.0}), 1.0, NormSpec::euclidean(2)};
    const BallRule& rule = euclidean_rule(2);
    const Matrix values = sample_on_rule(f, ball2.center, 1.0, ball2.norm, rule);
    const FitReport best = best_affine_on_rule(values, rule, f.target(), 4.0);
    const Matrix residual = values - best.map.on_rule(Vector::Zero(2), 1.0, rule);
    const double t1 = measured_T1_norm(rule, f.target(), 4.0, 64, 3, {residual});
    CHECK(quasi_opt_ratio(f, ball2, 4.0) <= 2.0 + t1);
    CHECK(t1 <= 10 * std::min(std::sqrt(8.0), 2.0));
}
