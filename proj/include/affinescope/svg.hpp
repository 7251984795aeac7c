#pragma once

#include <string>
#include <vector>

namespace afs {

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
};

/// A static line plot with markers. Non-finite points (and non-positive ones on log axes) are
/// skipped. Output depends only on the inputs, so plots are reproducible byte for byte.
std::string line_plot_svg(const PlotSpec& spec, const std::vector<PlotSeries>& series);

}  // namespace afs
