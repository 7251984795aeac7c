#include "affinescope/affine.hpp"

#include <algorithm>
#include <numeric>

namespace afs {

Matrix AffineMap::on_rule(const Vector& center, double radius, const BallRule& rule) const {
    Matrix out = (linear * (radius * rule.nodes)).colwise() + (intercept + linear * center);
    return out;
}

AffineMap to_global(const AffineMap& local, const Vector& center, double radius) {
    AffineMap out;
    out.linear = local.linear / radius;
    out.intercept = local.intercept - out.linear * center;
    return out;
}

std::pair<Vector, Matrix> projection_on_rule(const Matrix& values, const BallRule& rule) {
    require(values.cols() == rule.size(), "projection_on_rule: values do not match the rule");
    Vector mean = values * rule.weights;
    Matrix t1 = values * rule.weights.asDiagonal() * rule.nodes.transpose() * rule.moment_inverse;
    return {std::move(mean), std::move(t1)};
}

Vector mean_P0(const GridFunction& f, const Vector& center, double u, const BallRule& rule) {
    require(u > 0.0, "mean_P0: radius must be positive");
    const Matrix values = sample_on_rule(f, center, u, NormSpec::euclidean(f.dim()), rule);
    return values * rule.weights;
}

Vector mean_P0(const GridFunction& f, const Vector& center, double u) {
    return mean_P0(f, center, u, euclidean_rule(f.dim()));
}

Matrix linear_T(const GridFunction& f, const Vector& center, double u, const BallRule& rule) {
    require(u > 0.0, "linear_T: radius must be positive");
    const Matrix values = sample_on_rule(f, center, u, NormSpec::euclidean(f.dim()), rule);
    return projection_on_rule(values, rule).second / u;
}

Matrix linear_T(const GridFunction& f, const Vector& center, double u) {
    return linear_T(f, center, u, euclidean_rule(f.dim()));
}

AffineMap legendre_P1(const GridFunction& f, const Vector& center, double u, const BallRule& rule) {
    require(u > 0.0, "legendre_P1: radius must be positive");
    const Matrix values = sample_on_rule(f, center, u, NormSpec::euclidean(f.dim()), rule);
    auto [mean, t1] = projection_on_rule(values, rule);
    return to_global(AffineMap{mean, t1}, center, u);
}

AffineMap legendre_P1(const GridFunction& f, const Vector& center, double u) {
    return legendre_P1(f, center, u, euclidean_rule(f.dim()));
}

namespace {

Vector node_norms(const Matrix& residuals, const TargetNorm& target) {
    Vector norms(residuals.cols());
    for (Index i = 0; i < residuals.cols(); ++i) norms(i) = target(residuals.col(i));
    return norms;
}

double weighted_power_mean(const Vector& norms, const Vector& weights, double p) {
    const double top = norms.maxCoeff();
    if (top == 0.0) return 0.0;
    if (std::isinf(p)) return top;
    double acc = 0.0;
    for (Index i = 0; i < norms.size(); ++i)
        if (weights(i) > 0.0) acc += weights(i) * std::pow(norms(i) / top, p);
    return top * std::pow(acc, 1.0 / p);
}

// [1, z] design matrix, N × (n+1).
Matrix design(const BallRule& rule) {
    Matrix a(rule.size(), rule.dim() + 1);
    a.col(0).setOnes();
    a.rightCols(rule.dim()) = rule.nodes.transpose();
    return a;
}

AffineMap unpack(const Matrix& beta) {
    // beta is (n+1) × m
    return AffineMap{beta.row(0).transpose(), beta.bottomRows(beta.rows() - 1).transpose()};
}

// Weighted least squares with one weight per node shared by all components.
Matrix shared_weight_fit(const Matrix& a, const Matrix& values, const Vector& weights) {
    const Vector root = weights.cwiseMax(0.0).cwiseSqrt();
    const Matrix wa = root.asDiagonal() * a;
    const Matrix wy = root.asDiagonal() * values.transpose();
    return wa.colPivHouseholderQr().solve(wy);
}

// Weighted least squares with separate node weights per component (weights is m × N).
Matrix componentwise_fit(const Matrix& a, const Matrix& values, const Matrix& weights) {
    Matrix beta(a.cols(), values.rows());
    for (Index j = 0; j < values.rows(); ++j) {
        const Vector root = weights.row(j).transpose().cwiseMax(0.0).cwiseSqrt();
        const Matrix wa = root.asDiagonal() * a;
        const Vector wy = root.asDiagonal() * values.row(j).transpose();
        beta.col(j) = wa.colPivHouseholderQr().solve(wy);
    }
    return beta;
}

Matrix residuals_of(const Matrix& a, const Matrix& values, const Matrix& beta) {
    return values - (a * beta).transpose();
}

// IRLS weights for ∇ of ‖r‖_Y^p: node weight · N^{p−2} · B_k^{2−q} · |r_j|^{q−2}.
Matrix irls_weights(const Matrix& r, const Vector& node_weights, const TargetNorm& target, double p,
                    double floor) {
    const double q = std::isinf(target.q) ? 64.0 : target.q;
    const int block = target.block == 0 ? static_cast<int>(r.rows()) : target.block;
    Matrix w(r.rows(), r.cols());
    for (Index i = 0; i < r.cols(); ++i) {
        const Vector col = r.col(i);
        double outer = 0.0;
        Vector inner(r.rows() / block);
        for (Index k = 0; k < inner.size(); ++k) {
            inner(k) = lq_norm(col.segment(k * block, block), q);
            outer += inner(k) * inner(k);
        }
        outer = std::sqrt(outer);
        const double base = node_weights(i) * std::pow(std::max(outer, floor), p - 2.0);
        for (Index j = 0; j < r.rows(); ++j) {
            const double bk = std::max(inner(j / block), floor);
            w(j, i) = base * std::pow(bk, 2.0 - q) * std::pow(std::max(std::abs(col(j)), floor), q - 2.0);
        }
    }
    return w;
}

bool exact_least_squares(const TargetNorm& target, Index m) {
    if (m == 1) return true;
    if (target.q == 2.0) return true;
    return target.block == 1;
}

// Minimizes Σ w ‖r‖^p by damped IRLS started from the least-squares fit.
FitReport irls_fit(const Matrix& a, const Matrix& values, const Vector& weights, const TargetNorm& target,
                   double p, const FitOptions& options) {
    FitReport report;
    report.p = p;
    const double range = values.size() ? values.maxCoeff() - values.minCoeff() : 0.0;
    const double floor = std::max(1e-10 * range, 1e-300);
    Matrix beta = shared_weight_fit(a, values, weights);
    auto objective = [&](const Matrix& b) {
        return weighted_power_mean(node_norms(residuals_of(a, values, b), target), weights, p);
    };
    double current = objective(beta);
    Matrix best = beta;
    double best_value = current;
    const double damping = p > 2.0 ? 1.0 / (p - 1.0) : 1.0;
    report.converged = false;
    for (int it = 1; it <= options.max_iterations; ++it) {
        report.iterations = it;
        const Matrix r = residuals_of(a, values, beta);
        const Matrix w = irls_weights(r, weights, target, p, floor);
        const Matrix proposal = componentwise_fit(a, values, w);
        beta = beta + damping * (proposal - beta);
        const double next = objective(beta);
        const double change = std::abs(current - next);
        if (next < best_value) {
            report.gap = best_value - next;
            best_value = next;
            best = beta;
        } else {
            report.gap = 0.0;
        }
        current = next;
        if (change <= options.tolerance * std::max(best_value, 1e-300) || best_value == 0.0) {
            report.converged = true;
            break;
        }
    }
    report.map = unpack(best);
    report.error = best_value;
    return report;
}

// Exact 1-D minimax line through the upper/lower convex hulls of (x, y).
struct LineFit {
    double intercept;
    double slope;
    double error;
};

double spread(const std::vector<double>& x, const std::vector<double>& y, double s, double* mid) {
    double hi = -kInf;
    double lo = kInf;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = y[i] - s * x[i];
        hi = std::max(hi, v);
        lo = std::min(lo, v);
    }
    if (mid) *mid = 0.5 * (hi + lo);
    return 0.5 * (hi - lo);
}

std::vector<double> hull_slopes(std::vector<std::pair<double, double>> pts, bool upper) {
    std::sort(pts.begin(), pts.end());
    std::vector<std::pair<double, double>> hull;
    for (const auto& pt : pts) {
        if (!hull.empty() && hull.back().first == pt.first) {
            if ((upper && pt.second > hull.back().second) || (!upper && pt.second < hull.back().second))
                hull.back() = pt;
            continue;
        }
        while (hull.size() >= 2) {
            const auto& o = hull[hull.size() - 2];
            const auto& b = hull.back();
            const double cross = (b.first - o.first) * (pt.second - o.second) -
                                 (b.second - o.second) * (pt.first - o.first);
            if ((upper && cross >= 0.0) || (!upper && cross <= 0.0))
                hull.pop_back();
            else
                break;
        }
        hull.push_back(pt);
    }
    std::vector<double> slopes;
    for (std::size_t i = 1; i < hull.size(); ++i)
        slopes.push_back((hull[i].second - hull[i - 1].second) / (hull[i].first - hull[i - 1].first));
    return slopes;
}

LineFit minimax_line(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<std::pair<double, double>> pts(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) pts[i] = {x[i], y[i]};
    std::vector<double> cand = hull_slopes(pts, true);
    const std::vector<double> lower = hull_slopes(pts, false);
    cand.insert(cand.end(), lower.begin(), lower.end());
    if (cand.empty()) cand.push_back(0.0);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    // spread is convex in the slope: ternary search over the sorted breakpoints
    std::size_t lo = 0;
    std::size_t hi = cand.size() - 1;
    while (hi - lo > 2) {
        const std::size_t m1 = lo + (hi - lo) / 3;
        const std::size_t m2 = hi - (hi - lo) / 3;
        if (spread(x, y, cand[m1], nullptr) <= spread(x, y, cand[m2], nullptr))
            hi = m2;
        else
            lo = m1;
    }
    double best = kInf;
    for (std::size_t i = lo; i <= hi; ++i) best = std::min(best, spread(x, y, cand[i], nullptr));
    // ties: smallest intercept, then smallest slope, over the flat stretch of optimal slopes
    const double tie = best + 1e-12 * std::max(best, 1e-300);
    std::size_t first = lo;
    while (first > 0 && spread(x, y, cand[first - 1], nullptr) <= tie) --first;
    LineFit out{kInf, 0.0, best};
    for (std::size_t i = first; i < cand.size(); ++i) {
        double mid = 0.0;
        const double e = spread(x, y, cand[i], &mid);
        if (e > tie) {
            if (i > hi) break;
            continue;
        }
        if (mid < out.intercept - 1e-15 * std::max(1.0, std::abs(mid))) {
            out.intercept = mid;
            out.slope = cand[i];
        }
    }
    return out;
}

FitReport decoupled_minimax(const BallRule& rule, const Matrix& values, const TargetNorm& target) {
    FitReport report;
    report.p = kInf;
    std::vector<double> x(rule.size());
    for (Index i = 0; i < rule.size(); ++i) x[i] = rule.nodes(0, i);
    AffineMap map = AffineMap::zero(static_cast<int>(values.rows()), 1);
    for (Index j = 0; j < values.rows(); ++j) {
        std::vector<double> y(values.cols());
        for (Index i = 0; i < values.cols(); ++i) y[i] = values(j, i);
        const LineFit line = minimax_line(x, y);
        map.intercept(j) = line.intercept;
        map.linear(j, 0) = line.slope;
    }
    report.map = map;
    const Matrix r = values - map.on_rule(Vector::Zero(1), 1.0, rule);
    report.error = node_norms(r, target).maxCoeff();
    report.iterations = 1;
    return report;
}

// Lawson's multiplicative reweighting for min max_i ‖r_i‖. The weighted L₂ error is a lower
// bound on the minimax value, so gap = best max − best lower bound is certified when the
// inner fit is exact.
FitReport lawson_minimax(const Matrix& a, const Matrix& values, const TargetNorm& target,
                         const FitOptions& options) {
    FitReport report;
    report.p = kInf;
    const Index count = values.cols();
    Vector v = Vector::Constant(count, 1.0 / count);
    const bool exact_inner = exact_least_squares(target, values.rows());
    FitOptions inner = options;
    inner.max_iterations = 50;
    Matrix best;
    double best_upper = kInf;
    double best_lower = 0.0;
    report.converged = false;
    for (int it = 1; it <= options.minimax_iterations; ++it) {
        report.iterations = it;
        Matrix beta;
        if (exact_inner) {
            beta = shared_weight_fit(a, values, v);
        } else {
            const FitReport sub = irls_fit(a, values, v, target, 2.0, inner);
            beta.resize(a.cols(), values.rows());
            beta.row(0) = sub.map.intercept.transpose();
            beta.bottomRows(a.cols() - 1) = sub.map.linear.transpose();
        }
        const Vector e = node_norms(residuals_of(a, values, beta), target);
        const double upper = e.maxCoeff();
        const double lower = std::sqrt(std::max(0.0, v.dot(e.cwiseProduct(e))));
        if (upper < best_upper) {
            best_upper = upper;
            best = beta;
        }
        if (exact_inner) best_lower = std::max(best_lower, lower);
        if (best_upper == 0.0 || (exact_inner && best_upper - best_lower <= 1e-9 * best_upper)) {
            report.converged = true;
            break;
        }
        const double t = options.decision_threshold;
        if (t > 0.0 && (best_upper <= t || (exact_inner && best_lower > t))) break;
        const Vector ve = v.cwiseProduct(e);
        const double total = ve.sum();
        if (!(total > 0.0)) break;
        v = ve / total;
    }
    report.map = unpack(best);
    report.error = best_upper;
    report.gap = exact_inner ? best_upper - best_lower : 0.0;
    if (!exact_inner) report.converged = true;
    return report;
}

}  // namespace

double rule_lp_norm(const Matrix& residuals, const BallRule& rule, const TargetNorm& target, double p) {
    require(residuals.cols() == rule.size(), "rule_lp_norm: residuals do not match the rule");
    return weighted_power_mean(node_norms(residuals, target), rule.weights, p);
}

FitReport best_affine_on_rule(const Matrix& values, const BallRule& rule, const TargetNorm& target,
                              double p, const FitOptions& options) {
    require(p >= 1.0, "best_affine: p must be in [1, ∞]");
    require(values.cols() == rule.size(), "best_affine: values do not match the rule");
    target.validate();
    require(values.rows() == target.m, "best_affine: values do not match the target dimension");
    const Matrix a = design(rule);
    if (std::isinf(p)) {
        const bool decoupled = values.rows() == 1 || (target.block == 0 && std::isinf(target.q));
        if (rule.dim() == 1 && decoupled) return decoupled_minimax(rule, values, target);
        return lawson_minimax(a, values, target, options);
    }
    if (p == 2.0 && exact_least_squares(target, values.rows())) {
        FitReport report;
        report.p = 2.0;
        const Matrix beta = shared_weight_fit(a, values, rule.weights);
        report.map = unpack(beta);
        report.error = weighted_power_mean(node_norms(residuals_of(a, values, beta), target), rule.weights, 2.0);
        report.iterations = 1;
        return report;
    }
    return irls_fit(a, values, rule.weights, target, p, options);
}

FitReport best_affine(const GridFunction& f, const Ball& ball, double p, const FitOptions& options) {
    ball.validate();
    require(ball.norm.dim == f.dim(), "best_affine: ball dimension must match the grid");
    const BallRule& rule = ball_rule(ball.norm, options.nodes, options.seed);
    const Matrix values = sample_on_rule(f, ball.center, ball.radius, ball.norm, rule);
    FitReport report = best_affine_on_rule(values, rule, f.target(), p, options);
    report.map = to_global(report.map, ball.center, ball.radius);
    return report;
}

OpNorm op_norm(const Matrix& linear, const NormSpec& domain, const TargetNorm& target, std::uint64_t seed,
               int samples) {
    domain.validate();
    target.validate();
    require(linear.cols() == domain.dim, "op_norm: linear part does not match the domain dimension");
    require(linear.rows() == target.m, "op_norm: linear part does not match the target dimension");
    const int n = domain.dim;
    OpNorm out;
    if (domain.is_polytope() && (domain.p == 1.0 || n <= 20)) {
        // a convex function attains its max over a polytope at a vertex
        double best = 0.0;
        if (domain.p == 1.0) {
            for (int i = 0; i < n; ++i) best = std::max(best, target(linear.col(i)));
        } else {
            Vector w(n);
            for (std::uint64_t s = 0; s < (1ULL << (n - 1)); ++s) {
                for (int i = 0; i < n; ++i) w(i) = (i == 0 || !((s >> (i - 1)) & 1)) ? 1.0 : -1.0;
                best = std::max(best, target(linear * w));
            }
        }
        out.value = best / domain.scale;
        return out;
    }
    if (target.m == 1 || (target.block == 0 && std::isinf(target.q))) {
        double best = 0.0;
        for (Index j = 0; j < linear.rows(); ++j)
            best = std::max(best, dual_norm_eval(domain, linear.row(j).transpose()));
        out.value = best * target.scale;
        return out;
    }
    if (target.block == 0 && target.q == 2.0 && (domain.kind == NormKind::Ellipsoid || domain.p == 2.0)) {
        Matrix map = linear;
        if (domain.kind == NormKind::Ellipsoid) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(domain.matrix);
            map = linear * es.operatorInverseSqrt();
        }
        Eigen::JacobiSVD<Matrix> svd(map);
        out.value = svd.singularValues()(0) / domain.scale * target.scale;
        return out;
    }
    if (target.block == 0 && target.q == 1.0 && target.m <= 16) {
        // ‖Tw‖₁ = max over sign vectors s of ⟨Tᵀs, w⟩
        double best = 0.0;
        Vector s(target.m);
        for (std::uint64_t code = 0; code < (1ULL << (target.m - 1)); ++code) {
            for (int j = 0; j < target.m; ++j) s(j) = (j == 0 || !((code >> (j - 1)) & 1)) ? 1.0 : -1.0;
            best = std::max(best, dual_norm_eval(domain, linear.transpose() * s));
        }
        out.value = best * target.scale;
        return out;
    }
    // sampled lower bound with a local ascent polish
    out.exact = false;
    out.samples = samples;
    Rng rng(seed);
    auto value_at = [&](const Vector& w) { return target(linear * w) / norm_eval(domain, w); };
    Vector best_w = Vector::Unit(n, 0);
    double best = value_at(best_w);
    Vector w(n);
    for (int k = 0; k < samples; ++k) {
        for (int i = 0; i < n; ++i) w(i) = rng.normal();
        if (w.norm() == 0.0) continue;
        const double v = value_at(w);
        if (v > best) {
            best = v;
            best_w = w / norm_eval(domain, w);
        }
    }
    double step = 0.25;
    while (step > 1e-12) {
        bool improved = false;
        for (int i = 0; i < n; ++i) {
            for (double dir : {1.0, -1.0}) {
                Vector trial = best_w;
                trial(i) += dir * step;
                if (trial.norm() == 0.0) continue;
                const double v = value_at(trial);
                if (v > best) {
                    best = v;
                    best_w = trial / norm_eval(domain, trial);
                    improved = true;
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    out.value = best;
    return out;
}

double quasi_opt_ratio(const GridFunction& f, const Ball& ball, double p, const FitOptions& options) {
    ball.validate();
    require(ball.norm.is_euclidean() && ball.norm.scale == 1.0, "quasi_opt_ratio needs a Euclidean ball");
    const BallRule& rule = euclidean_rule(f.dim(), options.nodes, options.seed);
    const Matrix values = sample_on_rule(f, ball.center, ball.radius, ball.norm, rule);
    auto [mean, t1] = projection_on_rule(values, rule);
    const Matrix projected = (t1 * rule.nodes).colwise() + mean;
    const double num = rule_lp_norm(values - projected, rule, f.target(), p);
    const double den = best_affine_on_rule(values, rule, f.target(), p, options).error;
    const double tol = 1e-12 * (1.0 + values.cwiseAbs().maxCoeff());
    if (den <= tol) return num <= tol ? 1.0 : kInf;
    return num / den;
}

double measured_T1_norm(const BallRule& rule, const TargetNorm& target, double p, int family_size,
                        std::uint64_t seed, const std::vector<Matrix>& extra) {
    const int n = rule.dim();
    const int m = target.m;
    const Index count = rule.size();
    Rng rng(seed);
    auto ratio = [&](const Matrix& g) {
        const double base = rule_lp_norm(g, rule, target, p);
        if (base == 0.0) return 0.0;
        const Matrix t1 = projection_on_rule(g, rule).second;
        return rule_lp_norm(t1 * rule.nodes, rule, target, p) / base;
    };
    double best = 0.0;
    for (const Matrix& g : extra) best = std::max(best, ratio(g));
    std::vector<Index> weighted;
    for (Index i = 0; i < count; ++i)
        if (rule.weights(i) > 0.0) weighted.push_back(i);
    for (int k = 0; k < family_size; ++k) {
        Matrix g = Matrix::Zero(m, count);
        Vector amp(m);
        for (int j = 0; j < m; ++j) amp(j) = rng.normal();
        switch (k % 4) {
            case 0:  // independent signs
                for (Index i = 0; i < count; ++i)
                    for (int j = 0; j < m; ++j) g(j, i) = rng.sign();
                break;
            case 1: {  // half-space cap
                Vector theta(n);
                for (int d = 0; d < n; ++d) theta(d) = rng.normal();
                theta.normalize();
                const double cut = rng.uniform(-0.9, 0.9);
                for (Index i = 0; i < count; ++i)
                    if (theta.dot(rule.nodes.col(i)) > cut) g.col(i) = amp;
                break;
            }
            case 2: {  // linear plus noise
                const Matrix lin = Matrix::NullaryExpr(m, n, [&]() { return rng.normal(); });
                g = lin * rule.nodes;
                for (Index i = 0; i < count; ++i)
                    for (int j = 0; j < m; ++j) g(j, i) += 0.1 * rng.normal();
                break;
            }
            default: {  // concentrated near one node
                const Index i = weighted[rng.below(weighted.size())];
                for (Index l = 0; l < count; ++l)
                    if ((rule.nodes.col(l) - rule.nodes.col(i)).norm() < 0.05) g.col(l) = amp;
                g.col(i) = amp;
                break;
            }
        }
        best = std::max(best, ratio(g));
    }
    return best;
}

}  // namespace afs
