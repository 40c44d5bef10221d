#include "sigdim/svg_plot.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace sigdim {

namespace {

constexpr double kWidth = 840.0, kHeight = 560.0;
constexpr double kLeft = 70.0, kRight = 660.0;   // plot box x range
constexpr double kTop = 40.0, kBottom = 500.0;   // plot box y range

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

}  // namespace

std::string render_report_svg(const EvalReport& report) {
    if (report.points.empty()) throw std::invalid_argument("render_report_svg: empty report");

    // Series in first-appearance order.
    std::vector<std::string> names;
    std::map<std::string, std::vector<const PointResult*>> series;
    for (const auto& p : report.points) {
        const std::string n = to_string(p.estimator);
        if (!series.count(n)) names.push_back(n);
        series[n].push_back(&p);
    }

    double x_min = report.points.front().axis_value, x_max = x_min;
    for (const auto& p : report.points) {
        x_min = std::min(x_min, p.axis_value);
        x_max = std::max(x_max, p.axis_value);
    }
    const double x_span = (x_max > x_min) ? (x_max - x_min) : 1.0;

    auto sx = [&](double v) { return kLeft + (v - x_min) / x_span * (kRight - kLeft); };
    auto sy = [&](double rate) { return kBottom - rate * (kBottom - kTop); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
           fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
           "\" fill=\"white\"/>\n";

    // Gridlines and y ticks at 0, 0.25, ..., 1.
    for (int i = 0; i <= 4; ++i) {
        const double rate = 0.25 * i;
        const double y = sy(rate);
        svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(kRight) +
               "\" y2=\"" + fmt(y) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + fmt(kLeft - 10.0) + "\" y=\"" + fmt(y + 4.0) +
               "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" + fmt(rate) +
               "</text>\n";
    }

    // x ticks: every distinct axis value when few, else 6 evenly spaced.
    std::vector<double> xticks;
    for (const auto& p : series[names.front()]) xticks.push_back(p->axis_value);
    std::sort(xticks.begin(), xticks.end());
    xticks.erase(std::unique(xticks.begin(), xticks.end()), xticks.end());
    if (xticks.size() > 12) {
        std::vector<double> reduced;
        for (int i = 0; i <= 5; ++i) reduced.push_back(x_min + x_span * i / 5.0);
        xticks = reduced;
    }
    for (double t : xticks) {
        const double x = sx(t);
        svg += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(kBottom) + "\" x2=\"" + fmt(x) + "\" y2=\"" +
               fmt(kBottom + 6.0) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(kBottom + 22.0) +
               "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" + fmt(t) +
               "</text>\n";
    }

    // Axes.
    svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(kLeft) + "\" y2=\"" +
           fmt(kBottom) + "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kBottom) + "\" x2=\"" + fmt(kRight) +
           "\" y2=\"" + fmt(kBottom) + "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    svg += "<text x=\"" + fmt((kLeft + kRight) / 2.0) + "\" y=\"" + fmt(kBottom + 45.0) +
           "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">" + report.axis_name +
           "</text>\n";
    svg += "<text x=\"18\" y=\"" + fmt((kTop + kBottom) / 2.0) +
           "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
           fmt((kTop + kBottom) / 2.0) + ")\">success rate</text>\n";

    // Series polylines + markers.
    for (std::size_t s = 0; s < names.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        auto pts = series[names[s]];
        std::sort(pts.begin(), pts.end(),
                  [](const PointResult* a, const PointResult* b) { return a->axis_value < b->axis_value; });
        std::string poly;
        for (const auto* p : pts) {
            poly += fmt(sx(p->axis_value), "%.2f");
            poly += ",";
            poly += fmt(sy(p->rate), "%.2f");
            poly += " ";
        }
        svg += "<polyline fill=\"none\" stroke=\"";
        svg += color;
        svg += "\" stroke-width=\"2\" points=\"" + poly + "\"/>\n";
        for (const auto* p : pts) {
            svg += "<circle cx=\"" + fmt(sx(p->axis_value), "%.2f") + "\" cy=\"" +
                   fmt(sy(p->rate), "%.2f") + "\" r=\"3\" fill=\"";
            svg += color;
            svg += "\"/>\n";
        }
    }

    // Legend.
    const double lx = kRight + 20.0;
    for (std::size_t s = 0; s < names.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        const double y = kTop + 20.0 + 24.0 * static_cast<double>(s);
        svg += "<line x1=\"" + fmt(lx) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(lx + 28.0) + "\" y2=\"" +
               fmt(y) + "\" stroke=\"";
        svg += color;
        svg += "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + fmt(lx + 36.0) + "\" y=\"" + fmt(y + 4.0) +
               "\" font-family=\"sans-serif\" font-size=\"13\">" + names[s] + "</text>\n";
    }

    svg += "</svg>\n";
    return svg;
}

}  // namespace sigdim
