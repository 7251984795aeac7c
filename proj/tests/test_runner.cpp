#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "affinescope/runner.hpp"
#include "affinescope/schema.hpp"

#include <cstring>
#include <sstream>

using namespace afs;

namespace {

double tent(double x) {
    const double r = std::fmod(std::abs(x), 2.0);
    return r <= 1.0 ? r : 2.0 - r;
}

GridFunction random_grid(int n, int m, double q, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<int> res(n);
    Index points = 1;
    for (int a = 0; a < n; ++a) points *= (res[a] = 3 + static_cast<int>(rng.below(5)));
    Matrix values(m, points);
    for (Index i = 0; i < values.size(); ++i) values.data()[i] = rng.normal();
    Box box{Vector::Constant(n, -1.5), Vector::Constant(n, 0.75)};
    return GridFunction(box, res, TargetNorm{m, q}, values);
}

void check_same(const GridFunction& a, const GridFunction& b) {
    CHECK(a.dim() == b.dim());
    CHECK(a.resolution() == b.resolution());
    CHECK(a.target().m == b.target().m);
    CHECK(a.target().q == b.target().q);
    CHECK(a.target().block == b.target().block);
    CHECK(a.target().scale == b.target().scale);
    CHECK(a.box().lower == b.box().lower);
    CHECK(a.box().upper == b.box().upper);
    CHECK(a.values() == b.values());
    CHECK(a.lipschitz() == b.lipschitz());
}

ExperimentConfig config(const std::string& text) { return ExperimentConfig::from_json(Json::parse(text)); }

}  // namespace

TEST_CASE("AFSC1 and CSV round trips") {
    for (int n = 1; n <= 3; ++n) {
        GridFunction f = random_grid(n, 2, n == 2 ? kInf : 1.5, 40 + n);
        if (n != 3) f.set_lipschitz(2.5);
        std::stringstream bin(std::ios::in | std::ios::out | std::ios::binary);
        write_grid(f, bin);
        check_same(read_grid(bin), f);
        std::stringstream text;
        write_grid_csv(f, text);
        check_same(read_grid_csv(text), f);
    }
    TargetNorm blocked{6, 3.0, 3, 0.5};
    const GridFunction g = GridFunction::sample(Box::cube(1, 0.0, 1.0), 5, blocked, [](const Vector& x) { return Vector::Constant(6, x(0)); });
    std::stringstream bin(grid_bytes(g));
    check_same(read_grid(bin), g);
}

TEST_CASE("AFSC1 byte layout") {
    const GridFunction f = GridFunction::sample(Box::cube(1, -1.0, 1.0), 3, TargetNorm{1, kInf},
                                                [](const Vector& x) { return Vector::Constant(1, x(0)); });
    const std::string bytes = grid_bytes(f);
    REQUIRE(bytes.size() == 5 + 4 + 4 + 8 + 4 + 8 + (8 + 8 + 4) + 3 * 8);
    CHECK(bytes.substr(0, 5) == "AFSC1");
    const auto u32 = [&](std::size_t at) {
        std::uint32_t v = 0;
        for (int k = 3; k >= 0; --k) v = (v << 8) | static_cast<unsigned char>(bytes[at + k]);
        return v;
    };
    CHECK(u32(5) == 1);  // n
    CHECK(u32(9) == 1);  // m
    double q;
    std::memcpy(&q, bytes.data() + 13, 8);
    CHECK(q == 0.0);  // ∞
    CHECK(u32(49) == 3);
    double last;
    std::memcpy(&last, bytes.data() + bytes.size() - 8, 8);
    CHECK(last == 1.0);

    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_grid(truncated), ValidationError);
    std::stringstream bad("AFSC2" + bytes.substr(5));
    CHECK_THROWS_AS(read_grid(bad), ValidationError);
    std::stringstream csv("# afsc1-csv n=1 m=1 q=2 lower=0 upper=1 res=3\n0,1\n0.5,2\n");
    CHECK_THROWS_AS(read_grid_csv(csv), ValidationError);
}

TEST_CASE("FNV-1a reference values") {
    CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
    CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
    CHECK(hex64(fnv1a64("foobar")) == "85944171f73967e8");
}

TEST_CASE("JSON conversions") {
    CHECK(exponent_json(kInf) == "inf");
    CHECK(std::isinf(exponent_from_json(Json("inf"))));
    CHECK_THROWS_AS(exponent_from_json(Json(0.5)), ValidationError);
    Matrix a(2, 2);
    a << 2, 0.5, 0.5, 1;
    const NormSpec e = norm_from_json(to_json(NormSpec::ellipsoid(a)));
    CHECK(e.kind == NormKind::Ellipsoid);
    CHECK(e.matrix == a);
    const NormSpec l = norm_from_json(Json::parse(R"({"kind": "lp", "dim": 3, "p": "inf"})"));
    CHECK(std::isinf(l.p));
    CHECK_THROWS_AS(norm_from_json(Json::parse(R"({"kind": "lp", "dim": 3})")), ValidationError);
    MultiplierSpec m;
    m.family = Symbol::Bump;
    m.bump = BumpKind::Theta;
    m.k = -2;
    const MultiplierSpec back = multiplier_from_json(to_json(m));
    CHECK(back.family == Symbol::Bump);
    CHECK(back.bump == BumpKind::Theta);
    CHECK(back.k == -2);
}

TEST_CASE("schema validator") {
    const Json schema = Json::parse(R"({
        "type": "object", "required": ["a"], "additionalProperties": false,
        "properties": {"a": {"$ref": "#/$defs/pos"}, "b": {"type": "array", "items": {"enum": [1, "x"]}, "maxItems": 2},
                       "c": {"oneOf": [{"type": "integer"}, {"type": "number", "minimum": 5}]}},
        "$defs": {"pos": {"type": "number", "exclusiveMinimum": 0}}})");
    CHECK(schema_errors(Json::parse(R"({"a": 1, "b": [1, "x"]})"), schema).empty());
    CHECK(schema_errors(Json::parse(R"({"a": 0})"), schema).size() == 1);
    CHECK(schema_errors(Json::parse(R"({"b": [2]})"), schema).size() == 2);
    CHECK(schema_errors(Json::parse(R"({"a": 1, "z": 0})"), schema).size() == 1);
    CHECK(schema_errors(Json::parse(R"({"a": 1, "b": [1, 1, 1]})"), schema).size() == 1);
    CHECK(schema_errors(Json::parse(R"({"a": 1, "c": 6})"), schema).size() == 1);  // both alternatives match
    CHECK(schema_errors(Json::parse(R"({"a": 1, "c": 2.5})"), schema).size() == 1);
    CHECK(schema_errors(Json::parse(R"({"a": 1, "c": 7.5})"), schema).empty());
}

TEST_CASE("config validation") {
    const ExperimentConfig c = config(R"({"command": "fit", "input": "radial:n=2", "params": {"p": "inf"}, "seed": 4})");
    CHECK(c.seed == 4);
    CHECK(c.echo().contains("input"));
    CHECK_FALSE(c.echo().contains("output"));
    CHECK_THROWS_AS(config(R"({"command": "fit", "input": "radial", "extra": 1})"), ValidationError);
    CHECK_THROWS_AS(config(R"({"command": "fit", "input": "radial", "params": {"q": 1}})"), ValidationError);
    CHECK_THROWS_AS(config(R"({"command": "fit", "params": {}})"), ValidationError);
    CHECK_THROWS_AS(config(R"({"command": "plot"})"), ValidationError);
    CHECK_THROWS_AS(config(R"({"command": "umd", "params": {"depth": 15}})"), ValidationError);
    CHECK_THROWS_AS(config(R"({"command": "modulus", "input": "radial", "params": {"epsilons": [1.5]}})"), ValidationError);
    CHECK(exit_code_of(DomainError("x")) == 2);
    CHECK(exit_code_of(ValidationError("x")) == 2);
    CHECK(exit_code_of(NumericalError("x")) == 3);
    CHECK(exit_code_of(std::runtime_error("x")) == 1);
}

TEST_CASE("builtin corpus") {
    const GridFunction affine = corpus("affine:n=2:m=1", 5);
    const FitReport fit = best_affine(affine, Ball{Vector::Zero(2), 0.5, NormSpec::euclidean(2)}, 2.0);
    CHECK(fit.error < 1e-12);
    CHECK(*affine.lipschitz() == doctest::Approx(lipschitz_estimate(affine, NormSpec::euclidean(2))).epsilon(1e-6));

    const GridFunction saw = corpus("sawtooth:m=3:p=2");
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const double x = rng.uniform(-1.0, 1.0);
        const Vector v = saw(Vector::Constant(1, x));
        for (int k = 1; k <= 3; ++k) CHECK(v(k - 1) == doctest::Approx(std::sqrt(1.0 / 3.0) * tent(std::ldexp(x, k)) / (1 << k)).epsilon(1e-12));
    }

    const GridFunction lip = corpus("random-lip:n=2:seed=7");
    CHECK(*lip.lipschitz() == 1.0);
    for (std::uint64_t s : {0ULL, 9ULL}) {
        LipschitzOptions o;
        o.seed = s;
        CHECK(std::abs(lipschitz_estimate(lip, NormSpec::euclidean(2), o) - 1.0) < 0.05);
    }
    CHECK(grid_bytes(corpus("random-lip:n=2:seed=7", 123)) == grid_bytes(lip));
    CHECK(grid_bytes(corpus("random-lip:n=2", 7)) == grid_bytes(lip));

    const GridFunction cut = corpus("cutoff:radial:n=2:res=33");
    CHECK(cut(Vector::Zero(2)).norm() == 0.0);
    CHECK(cut.lipschitz().has_value());
    CHECK(corpus("tensor:n=2:m=2:K=0.5:res=17").target().block == 2);

    CHECK_THROWS_AS(corpus("spiral:n=2"), ValidationError);
    CHECK_THROWS_AS(corpus("radial:n=2:colour=3"), ValidationError);
    CHECK_THROWS_AS(corpus("radial:n"), ValidationError);
    CHECK_THROWS_AS(load_input("/nonexistent/file.afsc"), ValidationError);
}

TEST_CASE("fit command against an independent quadrature") {
    const RunReport r = run(config(R"({"command": "fit", "input": "sawtooth:m=2:p=2",
                                       "params": {"ball": {"center": [0], "radius": 1}, "p": 2}})"));
    // componentwise least squares on [−1, 1] with composite Simpson panels aligned to the kinks
    const int panels = 1 << 14;
    double err2 = 0.0;
    for (int k = 1; k <= 2; ++k) {
        auto f = [&](double x) { return std::sqrt(0.5) * tent(std::ldexp(x, k)) / (1 << k); };
        double m0 = 0, m1 = 0, m2 = 0, x2 = 0;
        for (int i = 0; i <= panels; ++i) {
            const double x = -1.0 + 2.0 * i / panels, w = (i == 0 || i == panels ? 1.0 : i % 2 ? 4.0 : 2.0) * (2.0 / panels) / 3.0 / 2.0;
            m0 += w * f(x), m1 += w * x * f(x), m2 += w * f(x) * f(x), x2 += w * x * x;
        }
        err2 += m2 - m0 * m0 - m1 * m1 / x2;
    }
    const Json& fit = r.report["result"]["fit"];
    CHECK(fit["error"].get<double>() == doctest::Approx(std::sqrt(err2)).epsilon(1e-6));
    CHECK(r.report["result"]["relative_error"].get<double>() == doctest::Approx(std::sqrt(err2)).epsilon(1e-6));
    CHECK(r.report["input"]["hash"] == hex64(fnv1a64(grid_bytes(corpus("sawtooth:m=2:p=2")))));
}

TEST_CASE("umd command in the scalar Hilbert case") {
    const RunReport r = run(config(R"({"command": "umd", "params": {"constant": "beta", "p": 2, "depth": 4}})"));
    CHECK(r.report["result"]["estimate"]["value"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.report["result"]["by_depth"].size() == 4);
    CHECK(r.files.count("umd.csv") == 1);
    const RunReport c = run(config(R"({"command": "umd", "params": {"constant": "cotype", "p": 2, "target": {"m": 3, "q": 2},
                                                                  "vectors": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}})"));
    CHECK(c.report["result"]["estimate"]["value"].get<double>() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("reports are reproducible and schema-valid") {
    const char* configs[] = {
        R"({"command": "fit", "input": "random-lip:n=2:seed=3:res=33", "params": {"p": 3}})",
        R"({"command": "modulus", "input": "sawtooth:m=3:p=2", "params": {"epsilons": [0.1, 0.2], "r_min": 0.125}})",
        R"({"command": "witness", "input": "radial:n=2:res=33", "params": {"epsilon": 0.2, "r_min": 0.125, "centers": 4, "sub_centers": 4}})",
        R"({"command": "dorronsoro", "input": "cutoff:random-lip:n=1:seed=2:res=257", "params": {"directions": 32, "points_per_octave": 2}})",
        R"({"command": "counterexample", "params": {"m": 2, "q": "inf"}})",
        R"({"command": "umd", "params": {"p": 3, "depth": 3, "target": {"m": 2, "q": 1}, "family_size": 2}})",
        R"({"command": "multiplier", "input": "random-lip:n=2:res=17", "params": {"multiplier": {"family": "frac_laplacian", "s": 0.5}}})",
    };
    const Json& schema = shipped_schema("report");
    for (const char* text : configs) {
        const ExperimentConfig c = config(text);
        CAPTURE(c.command);
        const RunReport a = run(c, 1), b = run(c, 3);
        CHECK(a.report.dump() == b.report.dump());
        CHECK(a.files == b.files);
        const std::vector<std::string> errors = schema_errors(a.report, schema);
        CHECK(errors.empty());
        const Json result_schema{{"$defs", schema.at("$defs")}, {"$ref", "#/$defs/" + c.command + "_result"}};
        CHECK(schema_errors(a.report["result"], result_schema).empty());
        CHECK(a.report["files"].size() == a.files.size());
    }
}
