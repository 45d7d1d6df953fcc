#pragma once

#include <array>
#include <string>
#include <vector>

namespace pacon {

/// One polyline on a plot.
struct PlotSeries {
    std::string label;
    std::vector<std::array<double, 2>> points;
};

/// Render a static SVG line plot. Pure function of its inputs: identical
/// input produces byte-identical output. With no data, axes are still drawn.
std::string render_line_plot(const std::string& title, const std::string& x_label,
                             const std::string& y_label,
                             const std::vector<PlotSeries>& series, int width = 860,
                             int height = 560);

}  // namespace pacon
