#include "pacon/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace pacon {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 150;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 55;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

Range data_range(const std::vector<PlotSeries>& series, int axis) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& s : series) {
        for (const auto& pt : s.points) {
            lo = std::min(lo, pt[axis]);
            hi = std::max(hi, pt[axis]);
        }
    }
    if (!(lo <= hi)) return {0.0, 1.0};
    if (lo == hi) return {lo - 0.5, hi + 0.5};
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

}  // namespace

std::string render_line_plot(const std::string& title, const std::string& x_label,
                             const std::string& y_label,
                             const std::vector<PlotSeries>& series, int width, int height) {
    const Range xr = data_range(series, 0);
    const Range yr = data_range(series, 1);
    const double plot_w = width - kMarginLeft - kMarginRight;
    const double plot_h = height - kMarginTop - kMarginBottom;
    const auto map_x = [&](double x) {
        return kMarginLeft + plot_w * (x - xr.lo) / (xr.hi - xr.lo);
    };
    const auto map_y = [&](double y) {
        return kMarginTop + plot_h * (1.0 - (y - yr.lo) / (yr.hi - yr.lo));
    };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">" << title << "</text>\n";

    // Axes box and ticks.
    out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << num(plot_w)
        << "\" height=\"" << num(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";
    constexpr int kTicks = 5;
    for (int i = 0; i <= kTicks; ++i) {
        const double fx = xr.lo + (xr.hi - xr.lo) * i / kTicks;
        const double px = map_x(fx);
        out << "<line x1=\"" << num(px) << "\" y1=\"" << num(kMarginTop + plot_h) << "\" x2=\""
            << num(px) << "\" y2=\"" << num(kMarginTop + plot_h + 5) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << num(px) << "\" y=\"" << num(kMarginTop + plot_h + 20)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(fx)
            << "</text>\n";
        const double fy = yr.lo + (yr.hi - yr.lo) * i / kTicks;
        const double py = map_y(fy);
        out << "<line x1=\"" << num(kMarginLeft - 5) << "\" y1=\"" << num(py) << "\" x2=\""
            << kMarginLeft << "\" y2=\"" << num(py) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << num(kMarginLeft - 8) << "\" y=\"" << num(py + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(fy)
            << "</text>\n";
    }
    out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
        << "</text>\n";
    out << "<text x=\"18\" y=\"" << kMarginTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 "
        << kMarginTop + plot_h / 2 << ")\">" << y_label << "</text>\n";

    for (size_t si = 0; si < series.size(); ++si) {
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        if (!series[si].points.empty()) {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& pt : series[si].points) {
                out << num(map_x(pt[0])) << ',' << num(map_y(pt[1])) << ' ';
            }
            out << "\"/>\n";
        }
        // Legend entry.
        const double ly = kMarginTop + 16.0 + 20.0 * static_cast<double>(si);
        const double lx = kMarginLeft + plot_w + 14.0;
        out << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(lx + 22)
            << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << num(lx + 28) << "\" y=\"" << num(ly)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[si].label << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace pacon
