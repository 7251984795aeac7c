#include "affinescope/dorronsoro.hpp"
#include "affinescope/harmonic.hpp"
#include "affinescope/parallel.hpp"

#include <algorithm>
#include <tuple>

namespace afs {

namespace {

// Lattice cells on which the interpolant of f can be nonzero, as an index range per axis.
struct SupportCells {
    bool empty = true;
    std::vector<int> lo, hi;  // inclusive cell indices
};

SupportCells support_cells(const GridFunction& f) {
    const int n = f.dim();
    SupportCells s;
    s.lo.assign(n, std::numeric_limits<int>::max());
    s.hi.assign(n, std::numeric_limits<int>::min());
    for (Index i = 0; i < f.point_count(); ++i) {
        if (f.value(i).cwiseAbs().maxCoeff() == 0.0) continue;
        s.empty = false;
        const auto multi = f.multi_index(i);
        for (int a = 0; a < n; ++a) {
            const int cells = f.resolution()[a] - 1;
            s.lo[a] = std::min(s.lo[a], std::max(multi[a] - 1, 0));
            s.hi[a] = std::max(s.hi[a], std::min(multi[a], cells - 1));
        }
    }
    return s;
}

// Distance from x to the axis box [lo, hi].
double box_distance(const Vector& x, const Vector& lo, const Vector& hi) {
    double acc = 0.0;
    for (Index a = 0; a < x.size(); ++a) {
        const double d = std::max({lo(a) - x(a), 0.0, x(a) - hi(a)});
        acc += d * d;
    }
    return std::sqrt(acc);
}

double min_step(const GridFunction& f) {
    double h = kInf;
    for (int a = 0; a < f.dim(); ++a) h = std::min(h, f.step(a));
    return h;
}

double residual_power(const Matrix& residuals, const BallRule& rule, const TargetNorm& target, double p) {
    double acc = 0.0;
    for (Index k = 0; k < residuals.cols(); ++k) {
        if (rule.weights(k) == 0.0) continue;
        const double r = residuals.rows() == 1 ? target.scale * std::abs(residuals(0, k)) : target(residuals.col(k));
        acc += rule.weights(k) * (p == 2.0 ? r * r : std::pow(r, p));
    }
    return acc;
}

// f at center + radius·node, zero outside the box.
Matrix sample_zero_extended(const GridFunction& f, const Vector& center, double radius, const BallRule& rule) {
    Matrix out = Matrix::Zero(f.target_dim(), rule.size());
    Vector point(f.dim());
    for (Index k = 0; k < rule.size(); ++k) {
        point = center + radius * rule.nodes.col(k);
        if (f.contains(point, 0.0)) f.eval_into(point.data(), out.col(k).data());
    }
    return out;
}

Vector value_zero_extended(const GridFunction& f, const Vector& x) {
    Vector out = Vector::Zero(f.target_dim());
    if (f.contains(x, 0.0)) f.eval_into(x.data(), out.data());
    return out;
}

void resolve_range(const GridFunction& f, const DorronsoroParams& params, double& u_min, double& u_max) {
    double half = kInf;
    for (int a = 0; a < f.dim(); ++a) half = std::min(half, 0.5 * (f.box().upper(a) - f.box().lower(a)));
    u_min = params.u_min > 0.0 ? params.u_min : 4.0 * min_step(f);
    u_max = params.u_max > 0.0 ? params.u_max : half / 4.0;
    require(u_min < u_max, "dorronsoro: u_min must be below u_max");
}

}  // namespace

void DorronsoroParams::validate() const {
    require(p >= 1.0 && std::isfinite(p), "dorronsoro: p must be in [1, ∞)");
    require(weight_exponent > 0.0 && std::isfinite(weight_exponent), "dorronsoro: weight exponent must be positive");
    require(u_min >= 0.0 && u_max >= 0.0, "dorronsoro: u range must be nonnegative");
    require(u_min == 0.0 || u_max == 0.0 || u_min < u_max, "dorronsoro: u_min must be below u_max");
    require(centers >= 1 && directions >= 1 && points_per_octave >= 1, "dorronsoro: counts must be >= 1");
    require(threads >= 1, "dorronsoro: threads must be >= 1");
    if (window) {
        require(window->lower.size() == window->upper.size(), "dorronsoro: window corners differ in dimension");
        require((window->lower.array() < window->upper.array()).all(), "dorronsoro: window must have positive extent");
    }
}

double local_defect(const GridFunction& f, const Vector& x, double u, double p, const BallRule& rule) {
    require(u > 0.0, "local_defect: radius must be positive");
    require(p >= 1.0 && std::isfinite(p), "local_defect: p must be in [1, ∞)");
    const Matrix values = sample_on_rule(f, x, u, NormSpec::euclidean(f.dim()), rule);
    const auto [mean, t1] = projection_on_rule(values, rule);
    const Matrix residuals = values - ((t1 * rule.nodes).colwise() + mean);
    return residual_power(residuals, rule, f.target(), p);
}

double local_defect(const GridFunction& f, const Vector& x, double u, double p) {
    return local_defect(f, x, u, p, euclidean_rule(f.dim()));
}

std::pair<std::vector<double>, std::vector<double>> dyadic_log_grid(double u_min, double u_max, int points_per_octave) {
    require(u_min > 0.0 && u_min < u_max, "log grid: need 0 < u_min < u_max");
    const double k = points_per_octave;
    const long first = static_cast<long>(std::ceil(k * std::log2(u_min) - 1e-9));
    const long last = static_cast<long>(std::floor(k * std::log2(u_max) + 1e-9));
    require(last > first, "log grid: u range is narrower than one grid step");
    std::vector<double> nodes, weights;
    const double step = std::log(2.0) / k;
    for (long j = first; j <= last; ++j) {
        nodes.push_back(std::exp2(j / k));
        weights.push_back(j == first || j == last ? 0.5 * step : step);
    }
    return {nodes, weights};
}

namespace {

// Defects on the (center, u) lattice; entries are −1 where the ball misses the support.
struct DefectField {
    std::vector<Vector> centers;
    std::vector<double> us, uw;
    Matrix defects;        // levels × centers
    double cell_weight = 0.0;  // volume represented by each center
};

DefectField compute_defects(const GridFunction& f, const DorronsoroParams& params) {
    params.validate();
    const int n = f.dim();
    double u_min, u_max;
    resolve_range(f, params, u_min, u_max);
    DefectField field;
    std::tie(field.us, field.uw) = dyadic_log_grid(u_min, u_max, params.points_per_octave);
    const SupportCells support = support_cells(f);
    if (support.empty) return field;

    // support box and the cells of its u_max-neighbourhood (or of the window) that host centers
    const Box& box = f.box();
    Vector supp_lo(n), supp_hi(n);
    auto& centers = field.centers;
    std::vector<int> cell_lo(n), cell_hi(n);
    double cell_volume = 1.0 / params.centers;
    for (int a = 0; a < n; ++a) {
        const double h = f.step(a);
        supp_lo(a) = box.lower(a) + support.lo[a] * h;
        supp_hi(a) = box.lower(a) + (support.hi[a] + 1) * h;
        const double lo = params.window ? params.window->lower(a) : supp_lo(a) - u_max;
        const double hi = params.window ? params.window->upper(a) : supp_hi(a) + u_max;
        cell_lo[a] = static_cast<int>(std::floor((lo - box.lower(a)) / h + 1e-9));
        cell_hi[a] = static_cast<int>(std::ceil((hi - box.lower(a)) / h - 1e-9)) - 1;
        const double reach_lo = box.lower(a) + cell_lo[a] * h - u_max;
        const double reach_hi = box.lower(a) + (cell_hi[a] + 1) * h + u_max;
        const double slack = 1e-9 * (box.upper(a) - box.lower(a));
        if (reach_lo < box.lower(a) - slack || reach_hi > box.upper(a) + slack)
            throw DomainError(params.window
                                  ? "dorronsoro: window dilated by u_max leaves the box"
                                  : "dorronsoro: support margin violated (f must vanish within 2·u_max of the box boundary)");
        cell_volume *= h;
    }

    // centers, seeded per lattice cell so that enlarged ranges and dilations reuse them
    std::vector<int> multi(cell_lo);
    for (;;) {
        std::uint64_t cell_id = 0;
        for (int a = 0; a < n; ++a) cell_id = cell_id * static_cast<std::uint64_t>(f.resolution()[a]) + multi[a];
        Rng rng(derive_seed(params.seed, cell_id));
        for (int c = 0; c < params.centers; ++c) {
            Vector x(n);
            for (int a = 0; a < n; ++a) x(a) = box.lower(a) + (multi[a] + rng.uniform()) * f.step(a);
            centers.push_back(std::move(x));
        }
        int a = n - 1;
        for (; a >= 0; --a) {
            if (++multi[a] <= cell_hi[a]) break;
            multi[a] = cell_lo[a];
        }
        if (a < 0) break;
    }

    field.cell_weight = cell_volume;

    const BallRule& rule = euclidean_rule(n, params.directions, params.seed);
    const Index count = static_cast<Index>(centers.size());
    const Index levels = static_cast<Index>(field.us.size());
    field.defects = Matrix::Constant(levels, count, -1.0);
    parallel_for(count, params.threads, [&](Index i) {
        const double gap = box_distance(centers[i], supp_lo, supp_hi);
        for (Index l = 0; l < levels; ++l)
            if (field.us[l] > gap) field.defects(l, i) = local_defect(f, centers[i], field.us[l], params.p, rule);
    });
    return field;
}

// (∫∫ defect / u^{q+1})^{1/p} with fixed-order reductions.
double integrate_defects(const DefectField& field, double q, double p, DorronsoroReport* diagnostics) {
    const Index levels = field.defects.rows();
    const Index count = field.defects.cols();
    std::vector<double> per_level(levels, 0.0), row(count);
    for (Index l = 0; l < levels; ++l) {
        const double scale = field.uw[l] / std::pow(field.us[l], q);
        for (Index i = 0; i < count; ++i) row[i] = std::max(field.defects(l, i), 0.0) * scale;
        per_level[l] = pairwise_sum(row) * field.cell_weight;
    }
    const double total = pairwise_sum(per_level);
    if (diagnostics) {
        double low = 0.0, high = 0.0;
        for (Index l = 0; l < levels; ++l) {
            if (field.us[l] < 2.0 * field.us.front() * (1 - 1e-12)) low += per_level[l];
            if (field.us[l] > 0.5 * field.us.back() * (1 + 1e-12)) high += per_level[l];
        }
        diagnostics->boundary_low = total > 0.0 ? low / total : 0.0;
        diagnostics->boundary_high = total > 0.0 ? high / total : 0.0;
        diagnostics->under_truncated = diagnostics->boundary_low > 0.2 || diagnostics->boundary_high > 0.2;
        diagnostics->evaluations = (field.defects.array() >= 0.0).count();
    }
    return std::pow(total, 1.0 / p);
}

}  // namespace

namespace {

void fill_table(const DefectField& field, std::vector<DefectSample>* table) {
    if (!table) return;
    for (std::size_t i = 0; i < field.centers.size(); ++i)
        for (std::size_t l = 0; l < field.us.size(); ++l)
            if (field.defects(l, i) >= 0.0) table->push_back({field.centers[i], field.us[l], field.defects(l, i)});
}

}  // namespace

double dorronsoro_lhs(const GridFunction& f, const DorronsoroParams& params, DorronsoroReport* diagnostics,
                      std::vector<DefectSample>* table) {
    const DefectField field = compute_defects(f, params);
    fill_table(field, table);
    return integrate_defects(field, params.weight_exponent, params.p, diagnostics);
}

DorronsoroReport dorronsoro_ratio_report(const GridFunction& f, double p, const DorronsoroParams& params,
                                         std::optional<double> s, std::vector<DefectSample>* table) {
    DorronsoroParams main = params;
    main.p = p;
    main.weight_exponent = p;
    DorronsoroReport report;
    const DefectField field = compute_defects(f, main);
    fill_table(field, table);
    report.lhs = integrate_defects(field, p, p, &report);
    report.rhs_w1p = sobolev_W1(f, p);
    report.ratio = report.rhs_w1p > 0.0 ? report.lhs / report.rhs_w1p : 0.0;
    if (s) {
        require(*s > 0.0 && *s < 1.0, "dorronsoro: s must be in (0, 1)");
        report.s = s;
        report.lhs_hsp = integrate_defects(field, p * *s, p, nullptr);
        report.rhs_hsp = riesz_Hsp(f, *s, p);
        report.ratio_hsp = *report.rhs_hsp > 0.0 ? *report.lhs_hsp / *report.rhs_hsp : 0.0;
    }
    return report;
}

LemmaNq lemma_nq_check(const GridFunction& f, const Vector& x, double p, double q, const DorronsoroParams& params) {
    params.validate();
    require(p >= 1.0 && std::isfinite(p), "lemma check: p must be in [1, ∞)");
    require(q > 0.0 && std::isfinite(q), "lemma check: q must be positive");
    require(x.size() == f.dim(), "lemma check: point dimension mismatch");
    require(f.contains(x), "lemma check: x must lie in the box");
    for (Index i = 0; i < f.point_count(); ++i) {
        const auto multi = f.multi_index(i);
        bool boundary = false;
        for (int a = 0; a < f.dim(); ++a) boundary = boundary || multi[a] == 0 || multi[a] == f.resolution()[a] - 1;
        if (boundary && f.value(i).cwiseAbs().maxCoeff() != 0.0)
            throw DomainError("lemma check: f must vanish on the box boundary (it is extended by zero)");
    }
    const int n = f.dim();
    const Box& box = f.box();
    const double diameter = (box.upper - box.lower).norm();
    const double h = min_step(f);
    const double u_min = params.u_min > 0.0 ? params.u_min : 4.0 * h;
    const double u_max = params.u_max > 0.0 ? params.u_max : 2.0 * diameter;

    LemmaNq out{0.0, 0.0};
    const BallRule& rule = euclidean_rule(n, params.directions, params.seed);
    const auto [us, uw] = dyadic_log_grid(u_min, u_max, params.points_per_octave);
    std::vector<double> lhs_terms(us.size());
    parallel_for(static_cast<Index>(us.size()), params.threads, [&](Index l) {
        const Matrix values = sample_zero_extended(f, x, us[l], rule);
        const Vector mean = values * rule.weights;
        lhs_terms[l] = residual_power(values.colwise() - mean, rule, f.target(), p) * uw[l] / std::pow(us[l], q);
    });
    out.lhs = unit_ball_volume(n) * pairwise_sum(lhs_terms);

    // right side in polar coordinates: geometric panels below the distance beyond which f = 0,
    // each split into Gauss subpanels no longer than half a grid step
    const Vector fx = value_zero_extended(f, x);
    const auto [dirs, dw] = sphere_rule(n, n == 2 ? 128 : 1024);
    const GaussRule gauss = gauss_legendre(8);
    double far = 0.0;
    for (int corner = 0; corner < (1 << n); ++corner) {
        Vector c(n);
        for (int a = 0; a < n; ++a) c(a) = (corner >> a) & 1 ? box.upper(a) : box.lower(a);
        far = std::max(far, (c - x).norm());
    }
    const double tiny = h * 1e-6;
    std::vector<double> rhs_terms(dirs.cols());
    parallel_for(dirs.cols(), params.threads, [&](Index k) {
        const Vector theta = dirs.col(k);
        auto integrand = [&](double r) {
            const double d = f.target()(Vector(value_zero_extended(f, x + r * theta) - fx));
            return std::pow(d, p) / std::pow(r, q + 1.0);
        };
        double acc = 0.0;
        for (double top = far; top > tiny; top *= 0.5) {
            const double bottom = std::max(0.5 * top, tiny);
            const int pieces = std::max(1, static_cast<int>(std::ceil((top - bottom) / (0.5 * h))));
            const double width = (top - bottom) / pieces;
            for (int piece = 0; piece < pieces; ++piece) {
                const double a = bottom + piece * width;
                for (std::size_t g = 0; g < gauss.nodes.size(); ++g)
                    acc += 0.5 * width * gauss.weights[g] * integrand(a + 0.5 * width * (gauss.nodes[g] + 1.0));
            }
        }
        // near 0 the difference is linear in r; beyond `far` it is ‖f(x)‖
        const double slope = f.target()(Vector(value_zero_extended(f, x + tiny * theta) - fx)) / tiny;
        acc += q < p ? std::pow(slope, p) * std::pow(tiny, p - q) / (p - q) : (slope > 0.0 ? kInf : 0.0);
        acc += std::pow(f.target()(fx), p) * std::pow(far, -q) / q;
        rhs_terms[k] = acc * dw;
    });
    out.rhs = std::pow(2.0, p) / (n + q) * pairwise_sum(rhs_terms);
    return out;
}

}  // namespace afs
