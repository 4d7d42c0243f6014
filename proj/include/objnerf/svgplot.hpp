#pragma once

#include <string>
#include <vector>

namespace objnerf {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> err; // optional symmetric error bars; empty = none
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
    int width = 640;
    int height = 420;
};

// Self-contained SVG line plot: axes with tick labels, one polyline with
// markers per series, error bars, legend.
std::string render_svg_plot(const PlotSpec& spec);
void write_svg_plot(const PlotSpec& spec, const std::string& path);

} // namespace objnerf
