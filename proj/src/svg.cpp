#include "affinescope/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace afs {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

std::string num(double x) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.2f", x);
    return buffer;
}

std::string tick(double x) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.3g", x);
    return buffer;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

struct Axis {
    double lo = 0, hi = 1;
    bool log = false;

    double t(double v) const {
        const double a = log ? std::log10(v) : v;
        return hi > lo ? (a - lo) / (hi - lo) : 0.5;
    }
};

}  // namespace

std::string line_plot_svg(const PlotSpec& spec, const std::vector<PlotSeries>& series) {
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0) && (!spec.log_y || y > 0);
    };
    Axis ax{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(), spec.log_x};
    Axis ay{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(), spec.log_y};
    for (const PlotSeries& s : series)
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
            if (usable(s.x[i], s.y[i])) {
                const double x = spec.log_x ? std::log10(s.x[i]) : s.x[i];
                const double y = spec.log_y ? std::log10(s.y[i]) : s.y[i];
                ax.lo = std::min(ax.lo, x), ax.hi = std::max(ax.hi, x);
                ay.lo = std::min(ay.lo, y), ay.hi = std::max(ay.hi, y);
            }
    if (ax.lo > ax.hi) ax.lo = 0, ax.hi = 1;
    if (ay.lo > ay.hi) ay.lo = 0, ay.hi = 1;
    if (ay.hi == ay.lo) ay.lo -= 0.5, ay.hi += 0.5;
    if (ax.hi == ax.lo) ax.lo -= 0.5, ax.hi += 0.5;

    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + ax.t(x) * pw; };
    auto py = [&](double y) { return kTop + (1.0 - ay.t(y)) * ph; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(spec.title)
        << "</text>\n";
    out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fx = ax.lo + (ax.hi - ax.lo) * k / 4.0, fy = ay.lo + (ay.hi - ay.lo) * k / 4.0;
        const double sx = kLeft + pw * k / 4.0, sy = kTop + ph * (1.0 - k / 4.0);
        out << "<text x=\"" << num(sx) << "\" y=\"" << num(kTop + ph + 16) << "\" text-anchor=\"middle\">"
            << tick(spec.log_x ? std::pow(10.0, fx) : fx) << "</text>\n";
        out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(sy + 4) << "\" text-anchor=\"end\">"
            << tick(spec.log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
    }
    out << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 12) << "\" text-anchor=\"middle\">"
        << escape(spec.x_label) << (spec.log_x ? " (log)" : "") << "</text>\n";
    out << "<text transform=\"translate(16," << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
        << escape(spec.y_label) << (spec.log_y ? " (log)" : "") << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const PlotSeries& s = series[k];
        const char* color = kColors[k % (sizeof(kColors) / sizeof(kColors[0]))];
        std::string points;
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
            if (usable(s.x[i], s.y[i])) points += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
        if (!points.empty()) {
            points.pop_back();
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << points << "\"/>\n";
            std::istringstream pts(points);
            std::string p;
            while (pts >> p) {
                const auto comma = p.find(',');
                out << "<circle cx=\"" << p.substr(0, comma) << "\" cy=\"" << p.substr(comma + 1) << "\" r=\"2.5\" fill=\"" << color
                    << "\"/>\n";
            }
        }
        out << "<text x=\"" << num(kLeft + pw - 8) << "\" y=\"" << num(kTop + 16 + 15 * k) << "\" text-anchor=\"end\" fill=\""
            << color << "\">" << escape(s.name) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace afs
