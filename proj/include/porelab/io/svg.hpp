#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "porelab/core/error.hpp"

namespace porelab {

struct SvgSeries {
    std::string label;
    std::string color = "#1f77b4";
    std::vector<double> x, y;
};

// Minimal deterministic log-log plot with decade ticks and an optional guide
// line of fixed slope anchored at the first point of the first series.
inline void write_loglog_svg(const std::string& path, const std::string& title,
                             const std::vector<SvgSeries>& series, double guide_slope = 0.0,
                             const std::string& guide_label = "") {
    const int W = 640, H = 480, ml = 70, mr = 20, mt = 40, mb = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!(xmin <= xmax) || !(ymin <= ymax))
        throw ValidationError("write_loglog_svg: no positive data");
    auto pad = [](double& lo, double& hi) {
        const double l = std::log10(lo), h = std::log10(hi);
        const double p = std::max(0.2, 0.05 * (h - l));
        lo = std::pow(10.0, l - p);
        hi = std::pow(10.0, h + p);
    };
    pad(xmin, xmax);
    pad(ymin, ymax);

    auto px = [&](double x) {
        return ml + (std::log10(x) - std::log10(xmin)) / (std::log10(xmax) - std::log10(xmin)) *
                        (W - ml - mr);
    };
    auto py = [&](double y) {
        return H - mb - (std::log10(y) - std::log10(ymin)) /
                            (std::log10(ymax) - std::log10(ymin)) * (H - mt - mb);
    };

    std::ofstream os(path);
    if (!os) throw ValidationError("write_loglog_svg: cannot open " + path);
    char buf[512];
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" font-family=\"monospace\" font-size=\"12\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";

    // decade grid
    for (int e = static_cast<int>(std::ceil(std::log10(xmin)));
         e <= static_cast<int>(std::floor(std::log10(xmax))); ++e) {
        const double x = std::pow(10.0, e);
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.1f\" y1=\"%d\" x2=\"%.1f\" y2=\"%d\" stroke=\"#ddd\"/>\n",
                      px(x), mt, px(x), H - mb);
        os << buf;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%d\" text-anchor=\"middle\">1e%d</text>\n", px(x),
                      H - mb + 18, e);
        os << buf;
    }
    for (int e = static_cast<int>(std::ceil(std::log10(ymin)));
         e <= static_cast<int>(std::floor(std::log10(ymax))); ++e) {
        const double y = std::pow(10.0, e);
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%d\" y1=\"%.1f\" x2=\"%d\" y2=\"%.1f\" stroke=\"#ddd\"/>\n", ml,
                      py(y), W - mr, py(y));
        os << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%.1f\" text-anchor=\"end\">1e%d</text>\n",
                      ml - 6, py(y) + 4, e);
        os << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" "
                  "stroke=\"black\"/>\n",
                  ml, mt, W - ml - mr, H - mt - mb);
    os << buf;

    // guide line anchored at the first point of the first series
    if (guide_slope != 0.0 && !series.empty() && !series[0].x.empty()) {
        const double x0 = series[0].x.front(), y0 = series[0].y.front();
        const double x1 = series[0].x.back();
        const double y1 = y0 * std::pow(x1 / x0, guide_slope);
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#888\" "
                      "stroke-dasharray=\"6,4\"/>\n",
                      px(x0), py(y0), px(x1), py(y1));
        os << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" fill=\"#666\">%s</text>\n",
                      px(x1) + 4, py(y1), guide_label.c_str());
        os << buf;
    }

    int legend_y = mt + 14;
    for (const auto& s : series) {
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px(s.x[i]), py(s.y[i]));
            os << buf;
        }
        os << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            std::snprintf(buf, sizeof buf,
                          "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3\" fill=\"%s\"/>\n", px(s.x[i]),
                          py(s.y[i]), s.color.c_str());
            os << buf;
        }
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%d\" y=\"%d\" fill=\"%s\">%s</text>\n", W - mr - 200, legend_y,
                      s.color.c_str(), s.label.c_str());
        os << buf;
        legend_y += 16;
    }
    os << "</svg>\n";
}

}  // namespace porelab
