#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "affinescope/geometry.hpp"

using namespace afs;

namespace {

// 2-periodic tent, written independently of the library version
double tent(double x) {
    const double r = std::fmod(std::abs(x), 2.0);
    return r <= 1.0 ? r : 2.0 - r;
}

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

}  // namespace

TEST_CASE("norm_eval closed forms") {
    CHECK(norm_eval(NormSpec::lp(2, 2.0), vec({3, 4})) == doctest::Approx(5.0));
    CHECK(norm_eval(NormSpec::lp(2, kInf), vec({3, -4})) == 4.0);
    CHECK(norm_eval(NormSpec::lp(3, 1.0), vec({1, 1, 1})) == 3.0);
    Matrix a(2, 2);
    a << 4, 0, 0, 9;
    CHECK(norm_eval(NormSpec::ellipsoid(a), vec({1, 1})) == doctest::Approx(std::sqrt(13.0)));
    CHECK_THROWS_AS(norm_eval(NormSpec::lp(2, 2.0), vec({1, 2, 3})), ValidationError);
}

TEST_CASE("invalid norm specs are rejected") {
    CHECK_THROWS_AS(NormSpec::lp(2, 0.5), ValidationError);
    Matrix bad(2, 2);
    bad << 1, 2, 0, 1;
    CHECK_THROWS_AS(NormSpec::ellipsoid(bad), ValidationError);
    Matrix indefinite(2, 2);
    indefinite << 1, 0, 0, -1;
    CHECK_THROWS_AS(NormSpec::ellipsoid(indefinite), ValidationError);
}

TEST_CASE("norms are homogeneous and satisfy the triangle inequality on samples") {
    Matrix a(3, 3);
    a << 2, 0.5, 0, 0.5, 1, 0.2, 0, 0.2, 3;
    const std::vector<NormSpec> specs = {NormSpec::lp(3, 1.0), NormSpec::lp(3, 1.5), NormSpec::lp(3, 2.0),
                                         NormSpec::lp(3, 4.0), NormSpec::lp(3, kInf), NormSpec::ellipsoid(a)};
    Rng rng(11);
    for (const auto& spec : specs) {
        for (int k = 0; k < 200; ++k) {
            Vector x(3), y(3);
            for (int i = 0; i < 3; ++i) {
                x(i) = rng.normal();
                y(i) = rng.normal();
            }
            const double t = rng.uniform(0.1, 10.0);
            CHECK(norm_eval(spec, Vector(t * x)) == doctest::Approx(t * norm_eval(spec, x)).epsilon(1e-13));
            CHECK(norm_eval(spec, Vector(x + y)) <= norm_eval(spec, x) + norm_eval(spec, y) + 1e-12);
        }
    }
}

TEST_CASE("euclid_sandwich matches a dense sphere scan") {
    // oracle: extreme values of ‖x‖/‖x‖₂ over 10⁵ directions on the circle
    auto scan = [](const NormSpec& spec) {
        double lo = kInf, hi = 0.0;
        for (int k = 0; k < 100000; ++k) {
            const double t = 2.0 * kPi * k / 100000;
            Vector x(2);
            x << std::cos(t), std::sin(t);
            const double r = norm_eval(spec, x);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        return std::make_pair(lo, hi);
    };
    const auto l1 = euclid_sandwich(NormSpec::lp(2, 1.0));
    CHECK(l1.c_low == doctest::Approx(1.0));
    CHECK(l1.c_high == doctest::Approx(std::sqrt(2.0)));
    for (double p : {1.0, 1.5, 3.0, kInf}) {
        const auto spec = NormSpec::lp(2, p);
        const auto s = euclid_sandwich(spec);
        const auto [lo, hi] = scan(spec);
        CHECK(s.c_low == doctest::Approx(lo).epsilon(1e-6));
        CHECK(s.c_high == doctest::Approx(hi).epsilon(1e-6));
    }
    for (int n : {1, 2, 5}) {
        const auto s = euclid_sandwich(NormSpec::euclidean(n));
        CHECK(s.c_low == 1.0);
        CHECK(s.c_high == 1.0);
        const auto e = euclid_sandwich(NormSpec::ellipsoid(Matrix::Identity(n, n)));
        CHECK(e.c_low == doctest::Approx(1.0));
        CHECK(e.c_high == doctest::Approx(1.0));
    }
}

TEST_CASE("sandwich has zero violations and john_normalize sets c_low to one") {
    Matrix a(2, 2);
    a << 3, 1, 1, 2;
    const std::vector<NormSpec> specs = {NormSpec::lp(2, 1.0), NormSpec::lp(4, 3.0), NormSpec::lp(3, kInf),
                                         NormSpec::ellipsoid(a)};
    Rng rng(3);
    for (const auto& raw : specs) {
        const NormSpec spec = john_normalize(raw);
        const auto s = euclid_sandwich(spec);
        CHECK(s.c_low == doctest::Approx(1.0));
        int violations = 0;
        for (int k = 0; k < 5000; ++k) {
            Vector x(spec.dim);
            for (int i = 0; i < spec.dim; ++i) x(i) = rng.normal();
            const double r = norm_eval(spec, x);
            const double e = x.norm();
            if (r < s.c_low * e * (1 - 1e-12) || r > s.c_high * e * (1 + 1e-12)) ++violations;
        }
        CHECK(violations == 0);
    }
}

TEST_CASE("dual norms") {
    CHECK(dual_norm_eval(NormSpec::lp(2, 1.0), vec({1, -3})) == 3.0);
    CHECK(dual_norm_eval(NormSpec::lp(2, kInf), vec({1, -3})) == 4.0);
    CHECK(dual_norm_eval(NormSpec::lp(2, 3.0), vec({1, 1})) == doctest::Approx(std::pow(2.0, 2.0 / 3.0)));
    CHECK(axis_extent(NormSpec::lp(2, kInf), 1) == 1.0);
}

TEST_CASE("sample_ball statistics") {
    const Ball unit{Vector::Zero(2), 1.0, NormSpec::euclidean(2)};
    const int count = 100000;
    const auto pts = sample_ball(unit, count, 42);
    REQUIRE(pts.size() == static_cast<std::size_t>(count));
    Vector mean = Vector::Zero(2);
    int inner = 0;
    for (const auto& x : pts) {
        mean += x;
        if (x.norm() < 0.5) ++inner;
        CHECK(unit.contains(x));
    }
    mean /= count;
    // coordinate variance on the unit disk is 1/4
    const double sigma = std::sqrt(0.25 / count);
    CHECK(std::abs(mean(0)) < 3 * sigma);
    CHECK(std::abs(mean(1)) < 3 * sigma);
    const double frac = static_cast<double>(inner) / count;
    CHECK(std::abs(frac - 0.25) < 3 * std::sqrt(0.25 * 0.75 / count));

    const Ball cube{Vector::Zero(2), 1.0, NormSpec::lp(2, kInf)};
    const auto qs = sample_ball(cube, count, 7);
    int quadrant = 0;
    for (const auto& x : qs) {
        CHECK(cube.contains(x));
        if (x(0) > 0 && x(1) > 0) ++quadrant;
    }
    CHECK(std::abs(static_cast<double>(quadrant) / count - 0.25) < 3 * std::sqrt(0.25 * 0.75 / count));
}

TEST_CASE("sample_ball is deterministic and respects centers and ellipsoids") {
    Matrix a(2, 2);
    a << 5, 1, 1, 2;
    const Ball ball{vec({1.0, -2.0}), 0.5, NormSpec::ellipsoid(a)};
    const auto first = sample_ball(ball, 2000, 9);
    const auto second = sample_ball(ball, 2000, 9);
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i] == second[i]);
        CHECK(ball.contains(first[i]));
    }
    const Ball l3{vec({0.0, 0.0, 0.0}), 2.0, NormSpec::lp(3, 3.0)};
    for (const auto& x : sample_ball(l3, 2000, 1)) CHECK(l3.contains(x));
}

TEST_CASE("sample_ball aborts on a vanishing acceptance rate") {
    const Ball cube{Vector::Zero(24), 1.0, NormSpec::lp(24, kInf)};
    CHECK_THROWS_AS(sample_ball(cube, 1, 0), NumericalError);
}

TEST_CASE("grid functions interpolate multilinear data exactly") {
    const Box box{vec({-1.0, 0.0}), vec({1.0, 2.0})};
    auto bilinear = [](const Vector& x) { return Vector::Constant(1, 1.0 + 2.0 * x(0) - x(1) + 0.5 * x(0) * x(1)); };
    const auto f = GridFunction::sample(box, std::vector<int>{5, 7}, TargetNorm{}, bilinear);
    Rng rng(5);
    for (int k = 0; k < 100; ++k) {
        const Vector x = vec({rng.uniform(-1, 1), rng.uniform(0, 2)});
        CHECK(f(x)(0) == doctest::Approx(bilinear(x)(0)).epsilon(1e-13));
    }
    CHECK_THROWS_AS(f(vec({1.5, 1.0})), DomainError);
    CHECK(f.contains_ball(Ball{vec({0.0, 1.0}), 1.0, NormSpec::euclidean(2)}));
    CHECK_FALSE(f.contains_ball(Ball{vec({0.5, 1.0}), 1.0, NormSpec::euclidean(2)}));
    CHECK(f.flat_index(f.multi_index(17)) == 17);
}

TEST_CASE("grid construction validates its input") {
    const Box box = Box::cube(1, 0.0, 1.0);
    CHECK_THROWS_AS(GridFunction(box, {1}, TargetNorm{}, Matrix::Zero(1, 1)), ValidationError);
    Matrix nan = Matrix::Zero(1, 3);
    nan(0, 1) = std::nan("");
    CHECK_THROWS_AS(GridFunction(box, {3}, TargetNorm{}, nan), ValidationError);
    CHECK_THROWS_AS(GridFunction(box, {3}, TargetNorm{0, 2.0}, Matrix::Zero(0, 3)), ValidationError);
}

TEST_CASE("lipschitz_estimate on simple functions") {
    const Box box = Box::cube(1, -1.0, 1.0);
    const NormSpec x = NormSpec::euclidean(1);
    const auto constant = GridFunction::sample(box, 33, TargetNorm{}, [](const Vector&) { return Vector::Constant(1, 3.0); });
    CHECK(lipschitz_estimate(constant, x) == 0.0);
    const auto identity = GridFunction::sample(box, 33, TargetNorm{}, [](const Vector& v) { return v; });
    CHECK(lipschitz_estimate(identity, x) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("lipschitz_estimate of the tent matches a full pair scan") {
    const Box box = Box::cube(1, -1.0, 1.0);
    for (int k : {2, 4, 6}) {
        const int res = (1 << k) + 1;
        const auto f = GridFunction::sample(box, res, TargetNorm{}, [](const Vector& v) {
            return Vector::Constant(1, tent(v(0)));
        });
        double oracle = 0.0;
        for (Index i = 0; i < f.point_count(); ++i)
            for (Index j = i + 1; j < f.point_count(); ++j)
                oracle = std::max(oracle, std::abs(f.value(i)(0) - f.value(j)(0)) /
                                              std::abs(f.point(i)(0) - f.point(j)(0)));
        CHECK(oracle == doctest::Approx(1.0));
        CHECK(lipschitz_estimate(f, NormSpec::euclidean(1)) == doctest::Approx(oracle).epsilon(1e-12));
    }
}

TEST_CASE("lipschitz_estimate does not decrease under refinement") {
    auto field = [](const Vector& v) {
        Vector out(2);
        out << std::sin(3 * v(0)) * std::cos(2 * v(1)), std::abs(v(0) - 0.3 * v(1));
        return out;
    };
    const Box box = Box::cube(2, -1.0, 1.0);
    for (const auto& spec : {NormSpec::lp(2, 1.0), NormSpec::euclidean(2), NormSpec::lp(2, kInf)}) {
        double previous = 0.0;
        for (int res : {65, 129, 257}) {
            const auto f = GridFunction::sample(box, res, TargetNorm{2, 2.0}, field);
            const double est = lipschitz_estimate(f, spec);
            CHECK(est >= previous - 1e-12);
            previous = est;
        }
    }
}
