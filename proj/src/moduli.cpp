#include "affinescope/moduli.hpp"

#include "affinescope/dorronsoro.hpp"
#include "affinescope/parallel.hpp"

#include <algorithm>
#include <numeric>

namespace afs {

namespace {

bool lex_less(const Vector& a, const Vector& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

double lipschitz_of(const GridFunction& f, const NormSpec& X) {
    const double L = f.lipschitz() ? *f.lipschitz() : lipschitz_estimate(f, X);
    // constant inputs: every error is zero, any positive normalizer gives the same verdict
    return L > 0.0 ? L : 1.0;
}

double residual_error(const GridFunction& f, const Ball& ball, const AffineMap& map, const BallRule& rule, double p) {
    const Matrix values = sample_on_rule(f, ball.center, ball.radius, ball.norm, rule);
    return rule_lp_norm(values - map.on_rule(ball.center, ball.radius, rule), rule, f.target(), p);
}

// One-dimensional rule on [−1, 1] built from Gauss panels between the given breakpoints, with
// every breakpoint added as a zero-weight node so that sup norms of piecewise affine residuals
// are exact.
BallRule breakpoint_rule(const std::vector<double>& breaks) {
    const GaussRule g = gauss_legendre(8);
    std::vector<double> nodes, weights;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double a = breaks[k], b = breaks[k + 1];
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            nodes.push_back(0.5 * (a + b) + 0.5 * (b - a) * g.nodes[i]);
            weights.push_back(0.25 * (b - a) * g.weights[i]);  // normalized: total length 2
        }
    }
    for (double x : breaks) {
        nodes.push_back(x);
        weights.push_back(0.0);
    }
    BallRule rule;
    rule.nodes = Eigen::Map<const Vector>(nodes.data(), static_cast<Index>(nodes.size())).transpose();
    rule.weights = Eigen::Map<const Vector>(weights.data(), static_cast<Index>(weights.size()));
    const double moment = (rule.nodes.row(0).transpose().array().square() * rule.weights.array()).sum();
    rule.moment_inverse = Matrix::Constant(1, 1, 1.0 / moment);
    return rule;
}

// Best L_q error of sawtooth_f on [a, b], normalized by the interval's measure.
double sawtooth_interval_error(const SawtoothSpec& spec, double a, double b, double q, const FitOptions& options) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    // kinks of every band lie on 2^{−m}Z
    const double step = std::ldexp(1.0, -spec.m);
    std::vector<double> breaks{-1.0};
    for (double k = std::floor(a / step) + 1; k * step < b; k += 1) {
        const double t = (k * step - c) / h;
        if (t > -1.0 && t < 1.0) breaks.push_back(t);
    }
    breaks.push_back(1.0);
    const BallRule rule = breakpoint_rule(breaks);
    Matrix values(spec.m, rule.size());
    for (Index i = 0; i < rule.size(); ++i) values.col(i) = sawtooth_f(spec, c + h * rule.nodes(0, i));
    return best_affine_on_rule(values, rule, spec.target(), q, options).error;
}

struct Evaluated {
    AffineMap map;  // global coordinates
    double error = kInf;
    double relative = kInf;
};

// Best affine fit on the ball, with P¹ as a competitor when p ≠ 2 (for p = 2 they coincide).
Evaluated fit_ball(const GridFunction& f, const Ball& ball, double p, double L, const BallRule& rule,
                   const FitOptions& options) {
    const int n = ball.norm.dim;
    const Matrix values = sample_on_rule(f, ball.center, ball.radius, ball.norm, rule);
    const FitReport fit = best_affine_on_rule(values, rule, f.target(), p, options);
    Evaluated out;
    out.map = fit.map;
    out.error = fit.error;
    if (p != 2.0) {
        auto [p0, t1] = projection_on_rule(values, rule);
        const AffineMap legendre{p0, t1};
        const double e = rule_lp_norm(values - legendre.on_rule(Vector::Zero(n), 1.0, rule), rule, f.target(), p);
        if (e < out.error) {
            out.map = legendre;
            out.error = e;
        }
    }
    out.map = to_global(out.map, ball.center, ball.radius);
    out.relative = out.error / (ball.radius * L);
    return out;
}

std::vector<Vector> level_centers(const NormSpec& X, double rho, int level, const ModulusQuery& query) {
    const int n = X.dim;
    std::vector<Vector> centers{Vector::Zero(n)};
    if (rho >= 1.0) return centers;
    if (n == 1) {
        const double extent = axis_extent(X, 0);
        const long k = std::lround(8.0 * (1.0 - rho) / rho);
        centers.clear();
        for (long i = -k; i <= k; ++i) centers.push_back(Vector::Constant(1, i * rho * extent / 8.0));
        return centers;
    }
    const long count = std::min<long>(4096, static_cast<long>(query.center_samples) << std::min(level, 12));
    for (Vector& y : sample_ball(Ball{Vector::Zero(n), 1.0 - rho, X}, static_cast<int>(count),
                                 derive_seed(query.seed, static_cast<std::uint64_t>(level))))
        centers.push_back(std::move(y));
    return centers;
}

}  // namespace

double sawtooth_phi(double x) {
    const double r = std::fmod(std::abs(x), 2.0);
    return r <= 1.0 ? r : 2.0 - r;
}

void SawtoothSpec::validate() const {
    require(m >= 1 && m <= 52, "sawtooth: band count m must be in [1, 52]");
    require(p >= 1.0, "sawtooth: target exponent p must be >= 1");
}

Vector sawtooth_f(const SawtoothSpec& spec, double x) {
    spec.validate();
    const double factor = std::isinf(spec.p) ? 1.0 : std::pow(static_cast<double>(spec.m), -1.0 / spec.p);
    Vector out(spec.m);
    for (int k = 1; k <= spec.m; ++k) out(k - 1) = factor * std::ldexp(sawtooth_phi(std::ldexp(x, k)), -k);
    return out;
}

void TensorSpec::validate() const {
    require(n >= 1, "tensor: dimension n must be >= 1");
    require(K > 0.0 && std::isfinite(K), "tensor: K must be positive");
    require(epsilon > 0.0 && std::isfinite(epsilon), "tensor: epsilon must be positive");
    inner.validate();
    const double exponent = std::pow(K / epsilon, inner.p);
    require(std::isfinite(std::exp(exponent)) && std::isfinite(std::exp((n - 1) * exponent)),
            "tensor: scale e^{(n-1)(K/eps)^p} overflows double precision");
}

double TensorSpec::scale() const {
    validate();
    return std::exp(std::pow(K / epsilon, inner.p));
}

Vector tensor_F(const TensorSpec& spec, const Vector& x) {
    const double lambda = spec.scale();
    require(x.size() == spec.n, "tensor_F: point dimension must equal n");
    const int m = spec.inner.m;
    Vector out(spec.n * m);
    double s = 1.0;
    for (int j = 0; j < spec.n; ++j) {
        out.segment(j * m, m) = sawtooth_f(spec.inner, s * x(j)) / s;
        s *= lambda;
    }
    return out;
}

CertifyTable certify_upper_bound(const SawtoothSpec& spec, double q, int dyadic_depth, const FitOptions& options) {
    spec.validate();
    require(q >= 1.0, "certify_upper_bound: q must be >= 1");
    require(dyadic_depth >= 0 && dyadic_depth <= spec.m + 2, "certify_upper_bound: depth must be in [0, m + 2]");
    CertifyTable table;
    table.spec = spec;
    table.q = q;
    table.eta = sawtooth_interval_error(SawtoothSpec{1, spec.p}, -1.0, 1.0, q, options);
    const double factor = std::isinf(spec.p) ? 1.0 : std::pow(static_cast<double>(spec.m), -1.0 / spec.p);
    const double threshold = 4.0 * std::ldexp(1.0, -spec.m);
    table.scaling = kInf;
    for (int d = 0; d <= dyadic_depth; ++d) {
        const long count = 1L << d;
        for (long j = 0; j < count; ++j) {
            CertifyRow row;
            row.depth = d;
            row.a = -1.0 + std::ldexp(2.0 * j, -d);
            row.b = -1.0 + std::ldexp(2.0 * (j + 1), -d);
            row.qualifying = row.b - row.a >= threshold;
            row.error = sawtooth_interval_error(spec, row.a, row.b, q, options);
            const double half = 0.5 * (row.b - row.a);
            row.bound = table.eta * factor * half;
            if (row.qualifying) {
                row.ok = row.error >= row.bound * (1 - 1e-6);
                if (!row.ok) ++table.violations;
                table.scaling = std::min(table.scaling, row.error / (factor * half) / table.eta);
            }
            table.rows.push_back(row);
        }
    }
    if (std::isinf(table.scaling)) table.scaling = 0.0;
    return table;
}

void ModulusQuery::validate() const {
    require(epsilon > 0.0 && epsilon < 1.0, "modulus query: epsilon must be in (0, 1)");
    require(p >= 1.0, "modulus query: p must be >= 1");
    require(r_min > 0.0 && r_min <= 1.0, "modulus query: r_min must be in (0, 1]");
    require(center_samples >= 1, "modulus query: center_samples must be >= 1");
    require(threads >= 1, "modulus query: threads must be >= 1");
}

ModulusResult search_modulus(const GridFunction& f, const NormSpec& X, const ModulusQuery& query) {
    query.validate();
    X.validate();
    require(X.dim == f.dim(), "search_modulus: norm dimension must equal the grid dimension");
    const double L = lipschitz_of(f, X);
    const double cap = 3.0 * L * (1 + 1e-9);
    const BallRule& rule = ball_rule(X, query.fit.nodes, query.fit.seed);
    ModulusResult result;
    for (int level = 0;; ++level) {
        const double rho = std::ldexp(1.0, -level);
        if (rho < query.r_min * (1 - 1e-12)) break;
        const std::vector<Vector> centers = level_centers(X, rho, level, query);
        std::vector<Evaluated> evals(centers.size());
        std::vector<double> norms(centers.size(), kInf);
        FitOptions fit = query.fit;
        // only the verdict against ε matters for the minimax fit, so Lawson may stop early
        if (fit.decision_threshold == 0.0) fit.decision_threshold = query.epsilon * rho * L;
        parallel_for(static_cast<Index>(centers.size()), query.threads, [&](Index i) {
            evals[i] = fit_ball(f, Ball{centers[i], rho, X}, query.p, L, rule, fit);
            if (evals[i].relative <= query.epsilon) norms[i] = op_norm(evals[i].map.linear, X, f.target()).value;
        });
        LevelRecord record;
        record.radius = rho;
        record.centers = static_cast<int>(centers.size());
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < centers.size(); ++i) {
            record.min_relative_error = std::min(record.min_relative_error, evals[i].relative);
            if (!(evals[i].relative <= query.epsilon && norms[i] <= cap)) continue;
            if (!best || evals[i].relative < evals[*best].relative ||
                (evals[i].relative == evals[*best].relative && lex_less(centers[i], centers[*best])))
                best = i;
        }
        record.accepted = best.has_value();
        result.levels.push_back(record);
        if (!best) continue;

        BallWitness w;
        w.ball = Ball{centers[*best], rho, X};
        w.map = evals[*best].map;
        w.relative_error = evals[*best].relative;
        w.linear_norm = norms[*best];
        w.linear_norm_ok = true;
        w.lipschitz = L;
        w.meets_epsilon = true;
        w.validated_error = residual_error(f, w.ball, w.map, validation_rule(X), query.p) / (rho * L);
        result.witness = w;
        break;
    }
    return result;
}

TransferCheck check_lp_implies_linfty(const GridFunction& f, const Ball& ball, const AffineMap& map, double epsilon,
                                      double p) {
    ball.validate();
    require(epsilon > 0.0, "check_lp_implies_linfty: epsilon must be positive");
    require(p >= 1.0, "check_lp_implies_linfty: p must be >= 1");
    const int n = ball.norm.dim;
    const double L = lipschitz_of(f, ball.norm);
    TransferCheck check;
    check.threshold = std::pow(epsilon / 9.0, 1.0 + (std::isinf(p) ? 0.0 : n / p));
    const double scale = ball.radius * L;
    const BallRule& rule = ball_rule(ball.norm);
    check.lp_relative = residual_error(f, ball, map, rule, p) / scale;
    check.linf_relative = std::max(residual_error(f, ball, map, rule, kInf),
                                   residual_error(f, ball, map, validation_rule(ball.norm), kInf)) /
                          scale;
    check.applicable = op_norm(map.linear, ball.norm, f.target()).value <= 3.0 * L * (1 + 1e-9);
    check.holds = !check.applicable || !(check.lp_relative <= check.threshold) || check.linf_relative <= epsilon;
    return check;
}

GridFunction cutoff_extend(const GridFunction& f, const NormSpec& X, const CutoffOptions& options) {
    X.validate();
    const int n = f.dim();
    require(X.dim == n, "cutoff_extend: norm dimension must equal the grid dimension");
    require(options.inner_radius >= 0.0 && options.margin >= 0.0, "cutoff_extend: radii must be non-negative");
    const double r = options.inner_radius > 0.0 ? options.inner_radius : 1.0 / std::sqrt(static_cast<double>(n));
    require(r * euclid_sandwich(X).c_high <= 1.0 + 1e-12,
            "cutoff_extend: the identity region r·B^n must lie inside B_X");
    if (!f.contains_box(Vector::Zero(n), Vector::Constant(n, r)))
        throw DomainError("cutoff_extend: the grid does not cover the identity region r·B^n");
    const double outer = (1.0 + 1.0 / n) * r;
    const double half = outer + (options.margin > 0.0 ? options.margin : 2.0 * r / n);

    // extend f's lattice by whole steps so both grids share nodes on r·B^n
    Box box{Vector(n), Vector(n)};
    std::vector<int> res(n);
    for (int a = 0; a < n; ++a) {
        const double h = f.step(a);
        const double below = std::ceil((f.box().lower(a) + half) / h - 1e-9);
        const double above = std::ceil((half - f.box().upper(a)) / h - 1e-9);
        box.lower(a) = f.box().lower(a) - below * h;
        box.upper(a) = f.box().upper(a) + above * h;
        res[a] = f.resolution()[a] + static_cast<int>(below + above);
    }
    const Vector f0 = f(Vector::Zero(n));
    GridFunction F = GridFunction::sample(box, res, f.target(), [&](const Vector& x) -> Vector {
        const double norm = x.norm();
        const double phi = norm <= r ? 1.0 : std::max(0.0, n + 1.0 - n * norm / r);
        if (phi == 0.0) return Vector::Zero(f.target_dim());
        return f(phi * x) - f0;
    });
    F.set_label(f.label().empty() ? "cutoff" : "cutoff(" + f.label() + ")");
    return F;
}

BallWitness find_affine_ball(const GridFunction& f, const NormSpec& X, double epsilon, double p,
                             const PipelineParams& params) {
    X.validate();
    const int n = f.dim();
    require(X.dim == n, "find_affine_ball: norm dimension must equal the grid dimension");
    require(epsilon > 0.0, "find_affine_ball: epsilon must be positive");
    require(p >= 1.0, "find_affine_ball: p must be >= 1");
    require(params.r_min > 0.0, "find_affine_ball: r_min must be positive");
    require(params.centers >= 1 && params.candidates >= 1 && params.sub_centers >= 1,
            "find_affine_ball: sample counts must be >= 1");
    const double L = lipschitz_of(f, X);
    const Sandwich sandwich = euclid_sandwich(X);
    const double r_in = 1.0 / sandwich.c_high;
    // y + (u/n)B_X ⊆ y + (u/n)B^n needs ‖·‖₂ ≤ ‖·‖_X; shrink when X is not in that position
    const double sub_factor = std::min(1.0, sandwich.c_low) / n;
    require(r_in * sub_factor >= params.r_min * (1 - 1e-12), "find_affine_ball: r_min exceeds the largest sub-ball");

    CutoffOptions cut;
    cut.inner_radius = r_in;
    const GridFunction F = cutoff_extend(f, X, cut);
    const double p_score = std::isinf(p) ? 2.0 : p;
    const BallRule& rule = ball_rule(X, params.fit.nodes, params.fit.seed);
    const double cap = 3.0 * L * (1 + 1e-9);

    BallWitness best;
    best.relative_error = kInf;
    best.lipschitz = L;
    for (int j = 0;; ++j) {
        const double u = std::ldexp(r_in, -j);
        const double rho = u * sub_factor;
        if (rho < params.r_min * (1 - 1e-12)) break;

        std::vector<Vector> xs;
        if (n == 1) {
            const long k = std::lround(8.0 * (r_in - u) / u);
            for (long i = -k; i <= k; ++i) xs.push_back(Vector::Constant(1, i * u / 8.0));
        } else {
            xs.push_back(Vector::Zero(n));
            if (r_in - u > 1e-12 * r_in)
                for (Vector& x : sample_ball(Ball{Vector::Zero(n), r_in - u, NormSpec::euclidean(n)}, params.centers,
                                             derive_seed(params.seed, 2 * static_cast<std::uint64_t>(j))))
                    xs.push_back(std::move(x));
        }
        std::vector<double> score(xs.size());
        parallel_for(static_cast<Index>(xs.size()), params.threads,
                     [&](Index i) { score[i] = std::pow(local_defect(F, xs[i], u, p_score), 1.0 / p_score) / u; });
        std::vector<std::size_t> order(xs.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return score[a] != score[b] ? score[a] < score[b] : lex_less(xs[a], xs[b]);
        });
        order.resize(std::min<std::size_t>(order.size(), params.candidates));

        // every candidate contributes Λ = P¹_u F at x and its sub-balls y + ρB_X
        std::vector<AffineMap> maps;
        std::vector<std::pair<std::size_t, Vector>> subs;
        for (std::size_t c = 0; c < order.size(); ++c) {
            const Vector& x = xs[order[c]];
            // F + f(0) = f on x + uB^n; sampling f itself avoids lattice cells of F that straddle
            // the sphere ‖·‖₂ = r_in, where F's interpolant mixes in cutoff values
            AffineMap map = legendre_P1(f, x, u);
            maps.push_back(std::move(map));
            subs.emplace_back(c, x);
            if (n > 1)
                for (Vector& y : sample_ball(Ball{x, (1.0 - 1.0 / n) * u, NormSpec::euclidean(n)}, params.sub_centers,
                                             derive_seed(params.seed, 2 * static_cast<std::uint64_t>(j) + 1 + (c << 32))))
                    subs.emplace_back(c, std::move(y));
        }
        std::vector<double> rel(subs.size());
        parallel_for(static_cast<Index>(subs.size()), params.threads, [&](Index i) {
            rel[i] = residual_error(f, Ball{subs[i].second, rho, X}, maps[subs[i].first], rule, p) / (rho * L);
        });
        std::size_t pick = 0;
        for (std::size_t i = 1; i < subs.size(); ++i)
            if (rel[i] < rel[pick] || (rel[i] == rel[pick] && lex_less(subs[i].second, subs[pick].second))) pick = i;

        const AffineMap& map = maps[subs[pick].first];
        const double norm = op_norm(map.linear, X, f.target()).value;
        const bool meets = rel[pick] <= epsilon && norm <= cap;
        if (meets || rel[pick] < best.relative_error) {
            best.ball = Ball{subs[pick].second, rho, X};
            best.map = map;
            best.relative_error = rel[pick];
            best.linear_norm = norm;
            best.linear_norm_ok = norm <= cap;
            best.meets_epsilon = meets;
        }
        if (meets) break;
    }
    require(std::isfinite(best.relative_error), "find_affine_ball: no scale was scanned");
    best.validated_error = residual_error(f, best.ball, best.map, validation_rule(X), p) / (best.ball.radius * L);
    return best;
}

}  // namespace afs
