#include "affinescope/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace afs {

namespace {

constexpr char kMagic[5] = {'A', 'F', 'S', 'C', '1'};
constexpr char kLipTag[4] = {'L', 'I', 'P', 'S'};

template <typename T>
void put(std::ostream& out, T value) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.write(bytes, sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
    char bytes[sizeof(T)];
    if (!in.read(bytes, sizeof(T))) throw ValidationError(std::string("AFSC1: truncated input while reading ") + what);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

// Finite doubles as numbers, infinities as "inf"/"-inf" (JSON has no infinity).
Json real(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return nullptr;
    return x;
}

std::string format_double(double x) {
    std::ostringstream s;
    s << std::setprecision(17) << x;
    return s.str();
}

std::map<std::string, std::string> parse_header(const std::string& line) {
    std::map<std::string, std::string> out;
    std::istringstream in(line);
    std::string token;
    while (in >> token) {
        const auto eq = token.find('=');
        if (eq != std::string::npos) out[token.substr(0, eq)] = token.substr(eq + 1);
    }
    return out;
}

std::vector<double> split_doubles(const std::string& text, char sep) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) {
        if (item.empty()) continue;
        try {
            out.push_back(item == "inf" ? kInf : std::stod(item));
        } catch (const std::exception&) {
            throw ValidationError("CSV grid: cannot parse number '" + item + "'");
        }
    }
    return out;
}

}  // namespace

void write_grid(const GridFunction& f, std::ostream& out) {
    const TargetNorm& t = f.target();
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(f.dim()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.m));
    put<double>(out, std::isinf(t.q) ? 0.0 : t.q);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.block));
    put<double>(out, t.scale);
    for (int a = 0; a < f.dim(); ++a) {
        put<double>(out, f.box().lower(a));
        put<double>(out, f.box().upper(a));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(f.resolution()[a]));
    }
    const Matrix& v = f.values();
    for (Index i = 0; i < v.size(); ++i) put<double>(out, v.data()[i]);  // column-major m × N = point-major
    if (f.lipschitz()) {
        out.write(kLipTag, sizeof(kLipTag));
        put<double>(out, *f.lipschitz());
    }
}

GridFunction read_grid(std::istream& in) {
    char magic[5];
    if (!in.read(magic, 5) || std::memcmp(magic, kMagic, 5) != 0) throw ValidationError("AFSC1: bad magic bytes");
    const auto n = get<std::uint32_t>(in, "n");
    const auto m = get<std::uint32_t>(in, "m");
    require(n >= 1 && n <= 8 && m >= 1 && m <= (1U << 20), "AFSC1: implausible dimensions");
    const double q = get<double>(in, "q");
    TargetNorm target{static_cast<int>(m), q == 0.0 ? kInf : q, static_cast<int>(get<std::uint32_t>(in, "block")),
                      get<double>(in, "scale")};
    target.validate();
    Box box{Vector(n), Vector(n)};
    std::vector<int> res(n);
    Index points = 1;
    for (std::uint32_t a = 0; a < n; ++a) {
        box.lower(a) = get<double>(in, "lower bound");
        box.upper(a) = get<double>(in, "upper bound");
        res[a] = static_cast<int>(get<std::uint32_t>(in, "resolution"));
        require(res[a] >= 2 && res[a] <= (1 << 24), "AFSC1: resolution must be in [2, 2^24]");
        points *= res[a];
        require(points <= (Index{1} << 31), "AFSC1: too many lattice points");
    }
    Matrix values(m, points);
    for (Index i = 0; i < values.size(); ++i) values.data()[i] = get<double>(in, "values");
    GridFunction f(box, res, target, std::move(values));
    char tag[4];
    if (in.read(tag, 4)) {
        if (std::memcmp(tag, kLipTag, 4) != 0) throw ValidationError("AFSC1: unknown trailer");
        f.set_lipschitz(get<double>(in, "Lipschitz constant"));
    }
    return f;
}

void write_grid_csv(const GridFunction& f, std::ostream& out) {
    const TargetNorm& t = f.target();
    out << "# afsc1-csv n=" << f.dim() << " m=" << t.m << " q=" << (std::isinf(t.q) ? std::string("inf") : format_double(t.q))
        << " block=" << t.block << " scale=" << format_double(t.scale) << " lower=";
    for (int a = 0; a < f.dim(); ++a) out << (a ? ";" : "") << format_double(f.box().lower(a));
    out << " upper=";
    for (int a = 0; a < f.dim(); ++a) out << (a ? ";" : "") << format_double(f.box().upper(a));
    out << " res=";
    for (int a = 0; a < f.dim(); ++a) out << (a ? ";" : "") << f.resolution()[a];
    if (f.lipschitz()) out << " lipschitz=" << format_double(*f.lipschitz());
    out << "\n";
    for (Index i = 0; i < f.point_count(); ++i) {
        const Vector x = f.point(i);
        for (int a = 0; a < f.dim(); ++a) out << format_double(x(a)) << ",";
        for (int r = 0; r < t.m; ++r) out << (r ? "," : "") << format_double(f.values()(r, i));
        out << "\n";
    }
}

GridFunction read_grid_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("# afsc1-csv", 0) != 0) throw ValidationError("CSV grid: missing '# afsc1-csv' header");
    auto meta = parse_header(line);
    for (const char* key : {"n", "m", "q", "lower", "upper", "res"})
        require(meta.count(key) == 1, std::string("CSV grid: header lacks ") + key);
    const int n = std::stoi(meta["n"]);
    const int m = std::stoi(meta["m"]);
    require(n >= 1 && n <= 8 && m >= 1, "CSV grid: implausible dimensions");
    TargetNorm target{m, meta["q"] == "inf" ? kInf : std::stod(meta["q"]), meta.count("block") ? std::stoi(meta["block"]) : 0,
                      meta.count("scale") ? std::stod(meta["scale"]) : 1.0};
    target.validate();
    const std::vector<double> lo = split_doubles(meta["lower"], ';'), hi = split_doubles(meta["upper"], ';'),
                              rs = split_doubles(meta["res"], ';');
    require(static_cast<int>(lo.size()) == n && static_cast<int>(hi.size()) == n && static_cast<int>(rs.size()) == n,
            "CSV grid: bounds and resolutions must have n entries");
    Box box{Eigen::Map<const Vector>(lo.data(), n), Eigen::Map<const Vector>(hi.data(), n)};
    std::vector<int> res(rs.begin(), rs.end());
    Index points = 1;
    for (int r : res) points *= r;
    Matrix values(m, points);
    Index row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<double> cells = split_doubles(line, ',');
        require(static_cast<int>(cells.size()) == n + m, "CSV grid: row " + std::to_string(row + 2) + " has the wrong width");
        require(row < points, "CSV grid: more rows than lattice points");
        for (int r = 0; r < m; ++r) values(r, row) = cells[n + r];
        ++row;
    }
    require(row == points, "CSV grid: fewer rows than lattice points");
    GridFunction f(box, res, target, std::move(values));
    if (meta.count("lipschitz")) f.set_lipschitz(std::stod(meta["lipschitz"]));
    return f;
}

void save_grid(const GridFunction& f, const std::string& path) {
    const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
    std::ofstream out(path, csv ? std::ios::out : std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    if (csv)
        write_grid_csv(f, out);
    else
        write_grid(f, out);
}

GridFunction load_grid(const std::string& path) {
    const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
    std::ifstream in(path, csv ? std::ios::in : std::ios::binary);
    if (!in) throw ValidationError("cannot open input '" + path + "'");
    return csv ? read_grid_csv(in) : read_grid(in);
}

std::string grid_bytes(const GridFunction& f) {
    std::ostringstream out(std::ios::binary);
    write_grid(f, out);
    return out.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << value;
    return s.str();
}

Json exponent_json(double p) { return std::isinf(p) ? Json("inf") : Json(p); }

double exponent_from_json(const Json& j) {
    if (j.is_string()) {
        require(j.get<std::string>() == "inf", "exponent strings must be \"inf\"");
        return kInf;
    }
    require(j.is_number(), "exponent must be a number or \"inf\"");
    const double p = j.get<double>();
    require(p >= 1.0, "exponent must be >= 1");
    return p;
}

Json to_json(const NormSpec& norm) {
    Json j{{"dim", norm.dim}, {"scale", norm.scale}};
    if (norm.kind == NormKind::Lp) {
        j["kind"] = "lp";
        j["p"] = exponent_json(norm.p);
    } else {
        j["kind"] = "ellipsoid";
        j["matrix"] = to_json(norm.matrix);
    }
    return j;
}

NormSpec norm_from_json(const Json& j) {
    require(j.is_object() && j.contains("kind"), "norm: expected an object with a kind");
    const std::string kind = j.at("kind").get<std::string>();
    NormSpec norm;
    if (kind == "lp") {
        require(j.contains("dim") && j.contains("p"), "norm: lp needs dim and p");
        norm = NormSpec::lp(j.at("dim").get<int>(), exponent_from_json(j.at("p")));
    } else if (kind == "ellipsoid") {
        require(j.contains("matrix"), "norm: ellipsoid needs a matrix");
        const Json& rows = j.at("matrix");
        require(rows.is_array() && !rows.empty(), "norm: matrix must be a non-empty array of rows");
        const Index n = static_cast<Index>(rows.size());
        Matrix a(n, n);
        for (Index r = 0; r < n; ++r) {
            require(rows[r].is_array() && static_cast<Index>(rows[r].size()) == n, "norm: matrix must be square");
            for (Index c = 0; c < n; ++c) a(r, c) = rows[r][c].get<double>();
        }
        norm = NormSpec::ellipsoid(a);
        if (j.contains("dim")) require(j.at("dim").get<int>() == n, "norm: dim does not match the matrix");
    } else {
        throw ValidationError("norm: unknown kind '" + kind + "'");
    }
    if (j.contains("scale")) norm.scale = j.at("scale").get<double>();
    norm.validate();
    return norm;
}

Json to_json(const TargetNorm& t) {
    return Json{{"m", t.m}, {"q", exponent_json(t.q)}, {"block", t.block}, {"scale", t.scale}};
}

TargetNorm target_from_json(const Json& j) {
    TargetNorm t;
    t.m = j.value("m", 1);
    if (j.contains("q")) t.q = exponent_from_json(j.at("q"));
    t.block = j.value("block", 0);
    t.scale = j.value("scale", 1.0);
    t.validate();
    return t;
}

Json to_json(const Vector& v) {
    Json j = Json::array();
    for (Index i = 0; i < v.size(); ++i) j.push_back(real(v(i)));
    return j;
}

Json to_json(const Matrix& a) {
    Json j = Json::array();
    for (Index r = 0; r < a.rows(); ++r) {
        Json row = Json::array();
        for (Index c = 0; c < a.cols(); ++c) row.push_back(real(a(r, c)));
        j.push_back(row);
    }
    return j;
}

Vector vector_from_json(const Json& j) {
    require(j.is_array(), "expected an array of numbers");
    Vector v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i) {
        require(j[i].is_number(), "expected an array of numbers");
        v(i) = j[i].get<double>();
    }
    return v;
}

Json to_json(const AffineMap& map) { return Json{{"intercept", to_json(map.intercept)}, {"linear", to_json(map.linear)}}; }

Json to_json(const FitReport& fit) {
    return Json{{"p", exponent_json(fit.p)},         {"error", real(fit.error)},
                {"intercept", to_json(fit.map.intercept)}, {"linear", to_json(fit.map.linear)},
                {"iterations", fit.iterations},      {"gap", real(fit.gap)},
                {"converged", fit.converged}};
}

Json to_json(const Ball& ball) {
    return Json{{"center", to_json(ball.center)}, {"radius", ball.radius}, {"norm", to_json(ball.norm)}};
}

Ball ball_from_json(const Json& j, int dim) {
    require(j.is_object(), "ball: expected an object");
    Ball ball;
    ball.center = j.contains("center") ? vector_from_json(j.at("center")) : Vector::Zero(dim);
    ball.radius = j.value("radius", 1.0);
    ball.norm = j.contains("norm") ? norm_from_json(j.at("norm")) : NormSpec::euclidean(dim);
    require(ball.center.size() == dim, "ball: center dimension does not match the input");
    ball.validate();
    return ball;
}

Json to_json(const BallWitness& w) {
    return Json{{"center", to_json(w.ball.center)},
                {"radius", w.ball.radius},
                {"norm", to_json(w.ball.norm)},
                {"intercept", to_json(w.map.intercept)},
                {"linear", to_json(w.map.linear)},
                {"relative_error", real(w.relative_error)},
                {"validated_error", real(w.validated_error)},
                {"linear_norm", real(w.linear_norm)},
                {"linear_norm_ok", w.linear_norm_ok},
                {"lipschitz", real(w.lipschitz)},
                {"meets_epsilon", w.meets_epsilon}};
}

Json to_json(const ModulusResult& r) {
    Json levels = Json::array();
    for (const LevelRecord& l : r.levels)
        levels.push_back(Json{{"radius", l.radius},
                              {"centers", l.centers},
                              {"min_relative_error", real(l.min_relative_error)},
                              {"accepted", l.accepted}});
    return Json{{"witness", r.witness ? to_json(*r.witness) : Json(nullptr)}, {"levels", levels}};
}

Json to_json(const DorronsoroReport& r) {
    auto opt = [](const std::optional<double>& x) { return x ? real(*x) : Json(nullptr); };
    return Json{{"lhs", real(r.lhs)},
                {"rhs_w1p", real(r.rhs_w1p)},
                {"ratio", real(r.ratio)},
                {"s", opt(r.s)},
                {"lhs_hsp", opt(r.lhs_hsp)},
                {"rhs_hsp", opt(r.rhs_hsp)},
                {"ratio_hsp", opt(r.ratio_hsp)},
                {"boundary_low", real(r.boundary_low)},
                {"boundary_high", real(r.boundary_high)},
                {"under_truncated", r.under_truncated},
                {"evaluations", r.evaluations}};
}

Json to_json(const CertifyTable& t) {
    Json rows = Json::array();
    for (const CertifyRow& row : t.rows)
        rows.push_back(Json{{"a", row.a},
                            {"b", row.b},
                            {"depth", row.depth},
                            {"qualifying", row.qualifying},
                            {"error", real(row.error)},
                            {"bound", real(row.bound)},
                            {"ok", row.ok}});
    return Json{{"m", t.spec.m},     {"p", exponent_json(t.spec.p)}, {"q", exponent_json(t.q)}, {"eta", real(t.eta)},
                {"violations", t.violations}, {"scaling", real(t.scaling)}, {"rows", rows}};
}

Json to_json(const ConstantEstimate& e) {
    Json witness;
    if (e.kind == "beta_p")
        witness = Json{{"martingale", e.martingale}, {"signs", e.signs}};
    else
        witness = Json{{"vectors", to_json(e.vectors)}};
    return Json{{"kind", e.kind}, {"p_or_q", exponent_json(e.exponent)}, {"value", real(e.value)}, {"depth", e.depth},
                {"witness", witness}, {"bound", "lower"}};
}

namespace {

const std::pair<Symbol, const char*> kSymbols[] = {{Symbol::FracLaplacian, "frac_laplacian"}, {Symbol::Riesz, "riesz"},
                                                   {Symbol::Derivative, "derivative"},         {Symbol::Heat, "heat"},
                                                   {Symbol::Ma, "ma"},                         {Symbol::Bump, "bump"}};
const std::pair<BumpKind, const char*> kBumps[] = {
    {BumpKind::Phi, "phi"}, {BumpKind::Psi, "psi"}, {BumpKind::Omega, "omega"}, {BumpKind::Theta, "theta"}};

}  // namespace

Json to_json(const MultiplierSpec& spec) {
    Json j;
    for (const auto& [sym, name] : kSymbols)
        if (sym == spec.family) j["family"] = name;
    switch (spec.family) {
        case Symbol::FracLaplacian: j["s"] = spec.s; break;
        case Symbol::Riesz:
        case Symbol::Derivative: j["axis"] = spec.axis; break;
        case Symbol::Heat: j["t"] = spec.t; break;
        case Symbol::Ma: j["a"] = spec.a; break;
        case Symbol::Bump:
            for (const auto& [b, name] : kBumps)
                if (b == spec.bump) j["bump"] = name;
            j["k"] = spec.k;
            j["axis"] = spec.axis;
            break;
    }
    return j;
}

MultiplierSpec multiplier_from_json(const Json& j) {
    require(j.is_object() && j.contains("family"), "multiplier: expected an object with a family");
    MultiplierSpec spec;
    const std::string family = j.at("family").get<std::string>();
    bool known = false;
    for (const auto& [sym, name] : kSymbols)
        if (family == name) {
            spec.family = sym;
            known = true;
        }
    require(known, "multiplier: unknown family '" + family + "'");
    spec.s = j.value("s", spec.s);
    spec.axis = j.value("axis", spec.axis);
    spec.t = j.value("t", spec.t);
    spec.a = j.value("a", spec.a);
    spec.k = j.value("k", spec.k);
    if (j.contains("bump")) {
        const std::string bump = j.at("bump").get<std::string>();
        known = false;
        for (const auto& [b, name] : kBumps)
            if (bump == name) {
                spec.bump = b;
                known = true;
            }
        require(known, "multiplier: unknown bump '" + bump + "'");
    }
    return spec;
}

}  // namespace afs
