#include "affinescope/runner.hpp"

#include "affinescope/schema.hpp"
#include "affinescope/svg.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace afs {

namespace {

std::string csv_number(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::ostringstream s;
    s << std::setprecision(17) << x;
    return s.str();
}

// Parses "name:k=v:k=v" into the name and its options.
std::pair<std::string, std::map<std::string, std::string>> split_id(const std::string& id) {
    std::map<std::string, std::string> options;
    const auto colon = id.find(':');
    const std::string name = id.substr(0, colon);
    if (colon == std::string::npos) return {name, options};
    std::istringstream rest(id.substr(colon + 1));
    std::string token;
    while (std::getline(rest, token, ':')) {
        const auto eq = token.find('=');
        require(eq != std::string::npos && eq > 0, "corpus id '" + id + "': expected key=value, got '" + token + "'");
        require(!options.count(token.substr(0, eq)), "corpus id '" + id + "': repeated key");
        options[token.substr(0, eq)] = token.substr(eq + 1);
    }
    return {name, options};
}

class Options {
public:
    Options(std::string id, std::map<std::string, std::string> values) : id_(std::move(id)), values_(std::move(values)) {}

    double real(const std::string& key, double fallback) {
        used_.push_back(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "inf") return kInf;
        try {
            std::size_t end = 0;
            const double v = std::stod(it->second, &end);
            if (end == it->second.size()) return v;
        } catch (const std::exception&) {
        }
        throw ValidationError("corpus id '" + id_ + "': '" + key + "' is not a number");
    }

    int integer(const std::string& key, int fallback) {
        const double v = real(key, fallback);
        require(std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e9, "corpus id '" + id_ + "': '" + key + "' must be an integer");
        return static_cast<int>(v);
    }

    void finish() const {
        for (const auto& [key, value] : values_)
            require(std::find(used_.begin(), used_.end(), key) != used_.end(),
                    "corpus id '" + id_ + "': unknown key '" + key + "'");
    }

private:
    std::string id_;
    std::map<std::string, std::string> values_;
    std::vector<std::string> used_;
};

int default_resolution(int n) { return n == 1 ? 1025 : n == 2 ? 129 : 33; }

}  // namespace

bool is_corpus_id(const std::string& input) {
    const std::string name = input.substr(0, input.find(':'));
    for (const char* known : {"affine", "sawtooth", "tensor", "radial", "random-lip", "cutoff"})
        if (name == known) return true;
    return false;
}

GridFunction corpus(const std::string& id, std::uint64_t seed) {
    if (id.rfind("cutoff:", 0) == 0) {
        const std::string inner = id.substr(7);
        require(is_corpus_id(inner), "corpus id '" + id + "': cutoff needs a builtin inner id");
        const GridFunction f = corpus(inner, seed);
        GridFunction F = cutoff_extend(f, NormSpec::euclidean(f.dim()));
        F.set_lipschitz(lipschitz_estimate(F, NormSpec::euclidean(f.dim())));
        F.set_label(id);
        return F;
    }
    auto [name, values] = split_id(id);
    Options opt(id, values);
    GridFunction g;
    if (name == "affine") {
        const int n = opt.integer("n", 2), m = opt.integer("m", 1);
        require(n >= 1 && n <= 3 && m >= 1 && m <= 64, "corpus affine: need 1 <= n <= 3 and 1 <= m <= 64");
        Rng rng(derive_seed(static_cast<std::uint64_t>(opt.integer("seed", static_cast<int>(seed % 1000000000))), 1));
        AffineMap map{Vector(m), Matrix(m, n)};
        for (Index i = 0; i < map.intercept.size(); ++i) map.intercept(i) = rng.normal();
        for (Index i = 0; i < map.linear.size(); ++i) map.linear.data()[i] = rng.normal();
        const double half = opt.real("half", 1.0);
        g = GridFunction::sample(Box::cube(n, -half, half), opt.integer("res", default_resolution(n)), TargetNorm{m, 2.0},
                                 [&](const Vector& x) { return map(x); });
        g.set_lipschitz(Eigen::JacobiSVD<Matrix>(map.linear).singularValues()(0));
    } else if (name == "sawtooth") {
        const SawtoothSpec spec{opt.integer("m", 3), opt.real("p", 2.0)};
        spec.validate();
        require(spec.m <= 16, "corpus sawtooth: m must be <= 16");
        // the kinks sit on multiples of 2^{−m}, which the default lattice contains
        const int res = opt.integer("res", std::max(1024, 1 << (spec.m + 4)) + 1);
        const double half = opt.real("half", 1.0);
        g = GridFunction::sample(Box::cube(1, -half, half), res, spec.target(),
                                 [&](const Vector& x) { return sawtooth_f(spec, x(0)); });
        g.set_lipschitz(1.0);
    } else if (name == "tensor") {
        TensorSpec spec;
        spec.n = opt.integer("n", 2);
        spec.inner = SawtoothSpec{opt.integer("m", 2), opt.real("p", 2.0)};
        spec.K = opt.real("K", 1.0);
        spec.epsilon = opt.real("eps", 1.0);
        spec.validate();
        require(spec.n <= 3, "corpus tensor: n must be <= 3");
        const double half = opt.real("half", 1.0);
        g = GridFunction::sample(Box::cube(spec.n, -half, half), opt.integer("res", default_resolution(spec.n)), spec.target(),
                                 [&](const Vector& x) { return tensor_F(spec, x); });
        g.set_lipschitz(1.0);
    } else if (name == "radial") {
        const int n = opt.integer("n", 2);
        require(n >= 1 && n <= 3, "corpus radial: n must be in [1, 3]");
        const double half = opt.real("half", 1.0);
        g = GridFunction::sample(Box::cube(n, -half, half), opt.integer("res", default_resolution(n)), TargetNorm{},
                                 [](const Vector& x) { return Vector::Constant(1, x.norm()); });
        g.set_lipschitz(1.0);
    } else if (name == "random-lip") {
        const int n = opt.integer("n", 2), m = opt.integer("m", 1);
        require(n >= 1 && n <= 3 && m >= 1 && m <= 16, "corpus random-lip: need 1 <= n <= 3 and 1 <= m <= 16");
        Rng rng(derive_seed(static_cast<std::uint64_t>(opt.integer("seed", static_cast<int>(seed % 1000000000))), 2));
        constexpr int terms = 4;
        Matrix freq(n, terms), amp(m, terms);
        Vector phase(terms);
        for (int k = 0; k < terms; ++k) {
            for (int a = 0; a < n; ++a) freq(a, k) = rng.uniform(-6.0, 6.0);
            for (int r = 0; r < m; ++r) amp(r, k) = rng.uniform(-1.0, 1.0);
            phase(k) = rng.uniform(0.0, 2 * kPi);
        }
        const double half = opt.real("half", 1.0);
        const GridFunction raw = GridFunction::sample(Box::cube(n, -half, half), opt.integer("res", default_resolution(n)),
                                                      TargetNorm{m, 2.0}, [&](const Vector& x) {
                                                          Vector v = Vector::Zero(m);
                                                          for (int k = 0; k < terms; ++k)
                                                              v += amp.col(k) * std::sin(freq.col(k).dot(x) + phase(k));
                                                          return v;
                                                      });
        // normalized by the pair-scan estimate, which then reads 1 on the stored lattice
        const double L = lipschitz_estimate(raw, NormSpec::euclidean(n));
        require(L > 0.0, "corpus random-lip: degenerate field");
        g = raw.map_values(raw.target(), [&](const Vector& v) { return Vector(v / L); });
        g.set_lipschitz(1.0);
    } else {
        throw ValidationError("unknown corpus id '" + id + "'");
    }
    opt.finish();
    g.set_label(id);
    return g;
}

GridFunction load_input(const std::string& input, std::uint64_t seed) {
    if (is_corpus_id(input)) return corpus(input, seed);
    require(std::filesystem::exists(input), "input '" + input + "' is neither a builtin corpus id nor an existing file");
    GridFunction g = load_grid(input);
    if (g.label().empty()) g.set_label(input);
    return g;
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
    require_valid(j, "config");
    ExperimentConfig c;
    c.command = j.at("command").get<std::string>();
    if (j.contains("input")) c.input = j.at("input").get<std::string>();
    if (j.contains("params")) c.params = j.at("params");
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    const Json& root = shipped_schema("config");
    const Json params_schema{{"$defs", root.at("$defs")}, {"$ref", "#/$defs/params_" + c.command}};
    const std::vector<std::string> errors = schema_errors(c.params, params_schema);
    if (!errors.empty()) {
        std::string message = "config violation in params for '" + c.command + "'";
        for (const std::string& e : errors) message += "\n  /params" + (e.rfind("(root)", 0) == 0 ? e.substr(6) : e);
        throw ValidationError(message);
    }
    static const char* const needs_input[] = {"fit", "modulus", "witness", "dorronsoro", "multiplier"};
    for (const char* cmd : needs_input)
        require(c.command != cmd || c.input.has_value(), "command '" + c.command + "' needs an input");
    return c;
}

Json ExperimentConfig::echo() const {
    Json j{{"command", command}, {"params", params}, {"seed", seed}};
    if (input) j["input"] = *input;
    return j;
}

namespace {

struct Context {
    const ExperimentConfig& config;
    int threads;
    std::optional<GridFunction> input;
    std::map<std::string, std::string> files;

    const GridFunction& f() const { return *input; }

    template <typename T>
    T param(const std::string& key, T fallback) const {
        return config.params.contains(key) ? config.params.at(key).get<T>() : fallback;
    }
    double exponent(const std::string& key, double fallback) const {
        return config.params.contains(key) ? exponent_from_json(config.params.at(key)) : fallback;
    }
    NormSpec norm() const {
        const NormSpec X = config.params.contains("norm") ? norm_from_json(config.params.at("norm")) : NormSpec::euclidean(f().dim());
        require(X.dim == f().dim(), "norm dimension does not match the input");
        return X;
    }
    FitOptions fit() const {
        FitOptions o;
        o.nodes = param("nodes", o.nodes);
        o.seed = config.seed;
        return o;
    }
};

double lipschitz_or_estimate(const GridFunction& f, const NormSpec& X) {
    if (f.lipschitz() && X.is_euclidean()) return *f.lipschitz();
    const double L = lipschitz_estimate(f, X);
    return L > 0.0 ? L : 1.0;
}

Json run_fit(Context& ctx) {
    const GridFunction& f = ctx.f();
    Ball ball;
    if (ctx.config.params.contains("ball")) {
        ball = ball_from_json(ctx.config.params.at("ball"), f.dim());
    } else {
        ball.center = 0.5 * (f.box().lower + f.box().upper);
        ball.radius = 0.5 * (f.box().upper - f.box().lower).minCoeff();
        ball.norm = NormSpec::euclidean(f.dim());
    }
    const double p = ctx.exponent("p", 2.0);
    const FitReport fit = best_affine(f, ball, p, ctx.fit());
    const double L = lipschitz_or_estimate(f, ball.norm);
    spdlog::info("fit: p = {}, error = {}", p, fit.error);
    return Json{{"ball", to_json(ball)}, {"fit", to_json(fit)}, {"lipschitz", L}, {"relative_error", fit.error / (ball.radius * L)}};
}

Json run_modulus(Context& ctx) {
    const GridFunction& f = ctx.f();
    const NormSpec X = ctx.norm();
    ModulusQuery query;
    query.p = ctx.exponent("p", 2.0);
    query.r_min = ctx.param("r_min", query.r_min);
    query.center_samples = ctx.param("center_samples", query.center_samples);
    query.seed = ctx.config.seed;
    query.threads = ctx.threads;
    query.fit = ctx.fit();
    const std::vector<double> epsilons = ctx.param("epsilons", std::vector<double>{0.1});

    Json runs = Json::array();
    std::ostringstream csv;
    csv << "epsilon,radius,centers,min_relative_error,accepted\n";
    PlotSeries curve{"witness radius", {}, {}};
    for (double eps : epsilons) {
        query.epsilon = eps;
        const ModulusResult r = search_modulus(f, X, query);
        Json run = to_json(r);
        run["epsilon"] = eps;
        run["radius"] = r.witness ? Json(r.witness->ball.radius) : Json(nullptr);
        runs.push_back(run);
        for (const LevelRecord& l : r.levels)
            csv << csv_number(eps) << "," << csv_number(l.radius) << "," << l.centers << "," << csv_number(l.min_relative_error) << ","
                << (l.accepted ? 1 : 0) << "\n";
        curve.x.push_back(eps);
        curve.y.push_back(r.witness ? r.witness->ball.radius : std::nan(""));
        spdlog::info("modulus: epsilon = {}, radius = {}", eps, r.witness ? r.witness->ball.radius : 0.0);
    }
    ctx.files["levels.csv"] = csv.str();
    ctx.files["modulus.svg"] = line_plot_svg({"empirical modulus", "epsilon", "largest accepted radius", true, true}, {curve});
    return Json{{"norm", to_json(X)}, {"p", exponent_json(query.p)}, {"runs", runs}};
}

Json run_witness(Context& ctx) {
    const NormSpec X = ctx.norm();
    PipelineParams params;
    params.r_min = ctx.param("r_min", params.r_min);
    params.centers = ctx.param("centers", params.centers);
    params.candidates = ctx.param("candidates", params.candidates);
    params.sub_centers = ctx.param("sub_centers", params.sub_centers);
    params.seed = ctx.config.seed;
    params.threads = ctx.threads;
    params.fit = ctx.fit();
    const double eps = ctx.param("epsilon", 0.1), p = ctx.exponent("p", 2.0);
    const BallWitness w = find_affine_ball(ctx.f(), X, eps, p, params);
    spdlog::info("witness: radius = {}, relative error = {}", w.ball.radius, w.relative_error);
    return Json{{"epsilon", eps}, {"p", exponent_json(p)}, {"witness", to_json(w)}};
}

Json run_dorronsoro(Context& ctx) {
    const GridFunction& f = ctx.f();
    DorronsoroParams params;
    params.p = ctx.param("p", 2.0);
    params.u_min = ctx.param("u_min", params.u_min);
    params.u_max = ctx.param("u_max", params.u_max);
    params.centers = ctx.param("centers", params.centers);
    params.directions = ctx.param("directions", params.directions);
    params.points_per_octave = ctx.param("points_per_octave", params.points_per_octave);
    params.seed = ctx.config.seed;
    params.threads = ctx.threads;
    std::optional<double> s;
    if (ctx.config.params.contains("s")) s = ctx.config.params.at("s").get<double>();
    std::vector<DefectSample> table;
    const DorronsoroReport report = dorronsoro_ratio_report(f, params.p, params, s, &table);

    std::ostringstream csv;
    for (int a = 0; a < f.dim(); ++a) csv << "x" << a << ",";
    csv << "u,defect\n";
    std::map<double, std::pair<double, int>> by_u;
    for (const DefectSample& d : table) {
        for (int a = 0; a < f.dim(); ++a) csv << csv_number(d.x(a)) << ",";
        csv << csv_number(d.u) << "," << csv_number(d.defect) << "\n";
        by_u[d.u].first += d.defect;
        by_u[d.u].second += 1;
    }
    PlotSeries mean{"mean local defect", {}, {}};
    for (const auto& [u, acc] : by_u) {
        mean.x.push_back(u);
        mean.y.push_back(acc.first / acc.second);
    }
    ctx.files["defects.csv"] = csv.str();
    ctx.files["defects.svg"] = line_plot_svg({"local affine defect against scale", "u", "mean defect", true, true}, {mean});
    spdlog::info("dorronsoro: lhs = {}, ratio = {}", report.lhs, report.ratio);
    return Json{{"p", params.p}, {"samples", table.size()}, {"report", to_json(report)}};
}

Json run_counterexample(Context& ctx) {
    const SawtoothSpec spec{ctx.param("m", 3), ctx.exponent("p", 2.0)};
    spec.validate();
    const double q = ctx.exponent("q", 2.0);
    FitOptions options;
    options.seed = ctx.config.seed;
    const CertifyTable table = certify_upper_bound(spec, q, ctx.param("depth", spec.m + 2), options);

    std::ostringstream csv;
    csv << "a,b,depth,qualifying,error,bound,ok\n";
    std::map<int, std::pair<double, double>> per_depth;  // min error, bound over qualifying rows
    for (const CertifyRow& row : table.rows) {
        csv << csv_number(row.a) << "," << csv_number(row.b) << "," << row.depth << "," << (row.qualifying ? 1 : 0) << ","
            << csv_number(row.error) << "," << csv_number(row.bound) << "," << (row.ok ? 1 : 0) << "\n";
        if (!row.qualifying) continue;
        auto it = per_depth.find(row.depth);
        if (it == per_depth.end())
            per_depth[row.depth] = {row.error, row.bound};
        else
            it->second.first = std::min(it->second.first, row.error);
    }
    PlotSeries errors{"min best-affine error", {}, {}}, bounds{"certified bound", {}, {}};
    for (const auto& [depth, v] : per_depth) {
        const double length = std::ldexp(2.0, -depth);
        errors.x.push_back(length);
        errors.y.push_back(v.first);
        bounds.x.push_back(length);
        bounds.y.push_back(v.second);
    }
    ctx.files["rows.csv"] = csv.str();
    ctx.files["counterexample.svg"] =
        line_plot_svg({"sawtooth lower bounds on dyadic intervals", "interval length", "error", true, true}, {errors, bounds});
    spdlog::info("counterexample: m = {}, violations = {}", spec.m, table.violations);
    return to_json(table);
}

Json run_umd(Context& ctx) {
    const std::string constant = ctx.param<std::string>("constant", "beta");
    const TargetNorm target = ctx.config.params.contains("target") ? target_from_json(ctx.config.params.at("target")) : TargetNorm{};
    const double p = ctx.param("p", 2.0);
    std::vector<std::pair<int, double>> by_depth;
    ConstantEstimate estimate;
    if (constant == "beta") {
        BetaQuery query;
        query.p = p;
        query.target = target;
        query.family_size = ctx.param("family_size", query.family_size);
        query.include_pisier = ctx.param("include_pisier", false);
        query.seed = ctx.config.seed;
        query.threads = ctx.threads;
        const int depth = ctx.param("depth", query.depth);
        for (int d = 1; d <= depth; ++d) {
            query.depth = d;
            estimate = beta_lower_bound(query);
            by_depth.emplace_back(d, estimate.value);
        }
    } else {
        Matrix vectors;
        if (ctx.config.params.contains("vectors")) {
            const Json& rows = ctx.config.params.at("vectors");
            vectors.resize(target.m, static_cast<Index>(rows.size()));
            for (std::size_t j = 0; j < rows.size(); ++j) {
                const Vector v = vector_from_json(rows[j]);
                require(v.size() == target.m, "umd: every vector must have the target dimension");
                vectors.col(static_cast<Index>(j)) = v;
            }
        } else {
            Rng rng(derive_seed(ctx.config.seed, 3));
            vectors.resize(target.m, ctx.param("count", 4));
            for (Index i = 0; i < vectors.size(); ++i) vectors.data()[i] = rng.normal();
        }
        require(vectors.cols() >= 1 && vectors.cols() <= 16, "umd: between 1 and 16 vectors are required");
        auto eval = [&](const Matrix& v) {
            return constant == "cotype" ? cotype_constant(v, target, p) : type_constant(v, target, p);
        };
        for (Index j = 1; j <= vectors.cols(); ++j) by_depth.emplace_back(static_cast<int>(j), eval(vectors.leftCols(j)).value);
        estimate = eval(vectors);
    }
    std::ostringstream csv;
    csv << "depth,value\n";
    PlotSeries curve{estimate.kind + " lower bound", {}, {}};
    Json rows = Json::array();
    for (const auto& [d, v] : by_depth) {
        csv << d << "," << csv_number(v) << "\n";
        curve.x.push_back(d);
        curve.y.push_back(v);
        rows.push_back(Json{{"depth", d}, {"value", v}});
    }
    ctx.files["umd.csv"] = csv.str();
    ctx.files["umd.svg"] = line_plot_svg(
        {"constant estimate by depth", constant == "beta" ? "martingale depth" : "number of vectors", "lower bound", false, false},
        {curve});
    spdlog::info("umd: {} = {}", estimate.kind, estimate.value);
    return Json{{"estimate", to_json(estimate)}, {"target", to_json(target)}, {"by_depth", rows}};
}

Json run_multiplier(Context& ctx) {
    const GridFunction& f = ctx.f();
    const MultiplierSpec spec = multiplier_from_json(ctx.config.params.at("multiplier"));
    spec.validate(f.dim());
    const SpectralField field = SpectralField::from_grid(f);
    const SpectralField out = apply_multiplier(field, spec);
    const std::string name = ctx.param<std::string>("output", "multiplied.afsc");
    require(!name.empty() && name.find('/') == std::string::npos && name != "report.json" && name != "timing.json",
            "multiplier: output must be a plain file name");
    GridFunction g = out.to_grid();
    const std::string bytes = name.size() >= 4 && name.compare(name.size() - 4, 4, ".csv") == 0
                                  ? [&] {
                                        std::ostringstream s;
                                        write_grid_csv(g, s);
                                        return s.str();
                                    }()
                                  : grid_bytes(g);
    ctx.files[name] = bytes;
    return Json{{"multiplier", to_json(spec)},
                {"output", name},
                {"output_hash", hex64(fnv1a64(bytes))},
                {"l2_in", torus_lp_norm(field, 2.0)},
                {"l2_out", torus_lp_norm(out, 2.0)}};
}

}  // namespace

RunReport run(const ExperimentConfig& config, int threads) {
    require(threads >= 1, "threads must be >= 1");
    static const bool logging_ready = (configure_logging(), true);
    (void)logging_ready;
    const auto start = std::chrono::steady_clock::now();
    Context ctx{config, threads, std::nullopt, {}};
    Json input = nullptr;
    if (config.input) {
        try {
            ctx.input = load_input(*config.input, config.seed);
        } catch (const DomainError& e) {
            throw DomainError("loading input '" + *config.input + "': " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError("loading input '" + *config.input + "': " + e.what());
        }
        const GridFunction& f = *ctx.input;
        input = Json{{"source", *config.input},
                     {"hash", hex64(fnv1a64(grid_bytes(f)))},
                     {"dim", f.dim()},
                     {"target", to_json(f.target())},
                     {"resolution", f.resolution()},
                     {"lipschitz", f.lipschitz() ? Json(*f.lipschitz()) : Json(nullptr)}};
        spdlog::debug("input {}: hash {}", *config.input, input["hash"].get<std::string>());
    }

    Json result;
    const std::string context = "command '" + config.command + "': ";
    try {
        if (config.command == "fit")
            result = run_fit(ctx);
        else if (config.command == "modulus")
            result = run_modulus(ctx);
        else if (config.command == "witness")
            result = run_witness(ctx);
        else if (config.command == "dorronsoro")
            result = run_dorronsoro(ctx);
        else if (config.command == "counterexample")
            result = run_counterexample(ctx);
        else if (config.command == "umd")
            result = run_umd(ctx);
        else if (config.command == "multiplier")
            result = run_multiplier(ctx);
        else
            throw ValidationError("unknown command");
    } catch (const DomainError& e) {
        throw DomainError(context + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(context + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(context + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(context + e.what());
    }

    RunReport out;
    Json files = Json::array();
    for (const auto& [name, bytes] : ctx.files) files.push_back(name);
    out.report = Json{{"schema", kReportSchemaId}, {"tool", "affinescope"}, {"version", kToolVersion}, {"command", config.command},
                      {"config", config.echo()}, {"input", input},   {"result", result},        {"files", files}};
    out.files = std::move(ctx.files);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.timing = Json{{"wall_seconds", wall}, {"threads", threads}};
    return out;
}

void write_outputs(const RunReport& report, const std::string& directory) {
    std::filesystem::create_directories(directory);
    auto write = [&](const std::string& name, const std::string& bytes) {
        const std::filesystem::path path = std::filesystem::path(directory) / name;
        std::ofstream out(path, std::ios::binary);
        if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())))
            throw ValidationError("cannot write '" + path.string() + "'");
    };
    write("report.json", report.report.dump(2) + "\n");
    write("timing.json", report.timing.dump(2) + "\n");
    for (const auto& [name, bytes] : report.files) write(name, bytes);
}

int exit_code_of(const std::exception& e) {
    if (dynamic_cast<const ValidationError*>(&e)) return 2;
    if (dynamic_cast<const NumericalError*>(&e)) return 3;
    return 1;
}

void configure_logging() {
    static bool configured = false;
    if (!configured) {
        spdlog::set_default_logger(spdlog::stderr_logger_st("affinescope"));
        spdlog::set_pattern("[%l] %v");
        configured = true;
    }
    const char* env = std::getenv("AFFINESCOPE_LOG");
    const std::string name = env ? env : "warn";
    const auto level = spdlog::level::from_str(name);
    // from_str maps unknown names to off; fall back to the default instead
    spdlog::set_level(level == spdlog::level::off && name != "off" ? spdlog::level::warn : level);
}

}  // namespace afs
