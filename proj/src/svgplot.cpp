#include "objnerf/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace objnerf {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

// Round tick spacing to 1/2/5 x 10^k covering the range with ~n ticks.
double nice_step(double span, int n) {
    double raw = span / std::max(1, n);
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double frac = raw / mag;
    double step = frac <= 1 ? 1 : frac <= 2 ? 2 : frac <= 5 ? 5 : 10;
    return step * mag;
}

} // namespace

std::string render_svg_plot(const PlotSpec& spec) {
    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    for (const PlotSeries& s : spec.series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            double e = i < s.err.size() ? std::abs(s.err[i]) : 0.0;
            x_min = std::min(x_min, s.x[i]);
            x_max = std::max(x_max, s.x[i]);
            y_min = std::min(y_min, s.y[i] - e);
            y_max = std::max(y_max, s.y[i] + e);
        }
    if (x_min > x_max) x_min = 0, x_max = 1;
    if (y_min > y_max) y_min = 0, y_max = 1;
    if (x_max - x_min < 1e-12) x_min -= 0.5, x_max += 0.5;
    if (y_max - y_min < 1e-12) y_min -= 0.5, y_max += 0.5;
    // headroom, and anchor y at zero when the data sits just above it
    double y_pad = (y_max - y_min) * 0.08;
    if (y_min > 0 && y_min < (y_max - y_min) * 0.5) y_min = 0;
    else y_min -= y_pad;
    y_max += y_pad;
    double x_pad = (x_max - x_min) * 0.04;
    x_min -= x_pad;
    x_max += x_pad;

    const int ml = 62, mr = 16, mt = spec.title.empty() ? 14 : 34, mb = 46;
    double pw = spec.width - ml - mr, ph = spec.height - mt - mb;
    auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
    auto py = [&](double y) { return mt + ph - (y - y_min) / (y_max - y_min) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
       << spec.height << "\" viewBox=\"0 0 " << spec.width << " " << spec.height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";

    // gridlines + ticks
    double ys = nice_step(y_max - y_min, 5);
    for (double t = std::ceil(y_min / ys) * ys; t <= y_max + 1e-12; t += ys) {
        double y = py(t);
        os << "<line x1=\"" << ml << "\" y1=\"" << fmt(y) << "\" x2=\"" << ml + pw << "\" y2=\""
           << fmt(y) << "\" stroke=\"#e0e0e0\"/>\n";
        os << "<text x=\"" << ml - 6 << "\" y=\"" << fmt(y + 4)
           << "\" text-anchor=\"end\">" << fmt(t) << "</text>\n";
    }
    double xs = nice_step(x_max - x_min, 6);
    for (double t = std::ceil(x_min / xs) * xs; t <= x_max + 1e-12; t += xs) {
        double x = px(t);
        os << "<line x1=\"" << fmt(x) << "\" y1=\"" << mt << "\" x2=\"" << fmt(x) << "\" y2=\""
           << mt + ph << "\" stroke=\"#e0e0e0\"/>\n";
        os << "<text x=\"" << fmt(x) << "\" y=\"" << mt + ph + 18
           << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
    }
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << fmt(pw) << "\" height=\""
       << fmt(ph) << "\" fill=\"none\" stroke=\"#404040\"/>\n";

    // series
    for (size_t si = 0; si < spec.series.size(); ++si) {
        const PlotSeries& s = spec.series[si];
        const char* color = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
        std::ostringstream pts;
        for (size_t i = 0; i < s.x.size(); ++i)
            pts << fmt(px(s.x[i])) << "," << fmt(py(s.y[i])) << " ";
        os << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"1.8\"/>\n";
        for (size_t i = 0; i < s.x.size(); ++i) {
            double cx = px(s.x[i]), cy = py(s.y[i]);
            if (i < s.err.size() && s.err[i] > 0) {
                double lo = py(s.y[i] - s.err[i]), hi = py(s.y[i] + s.err[i]);
                os << "<line x1=\"" << fmt(cx) << "\" y1=\"" << fmt(lo) << "\" x2=\"" << fmt(cx)
                   << "\" y2=\"" << fmt(hi) << "\" stroke=\"" << color << "\"/>\n";
                for (double e : {lo, hi})
                    os << "<line x1=\"" << fmt(cx - 3) << "\" y1=\"" << fmt(e) << "\" x2=\""
                       << fmt(cx + 3) << "\" y2=\"" << fmt(e) << "\" stroke=\"" << color
                       << "\"/>\n";
            }
            os << "<circle cx=\"" << fmt(cx) << "\" cy=\"" << fmt(cy) << "\" r=\"2.6\" fill=\""
               << color << "\"/>\n";
        }
    }

    // legend (top right, inside the plot frame)
    double lx = ml + pw - 10, ly = mt + 10;
    for (size_t si = 0; si < spec.series.size(); ++si) {
        const char* color = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
        double y = ly + double(si) * 17;
        os << "<line x1=\"" << fmt(lx - 120) << "\" y1=\"" << fmt(y) << "\" x2=\""
           << fmt(lx - 98) << "\" y2=\"" << fmt(y) << "\" stroke=\"" << color
           << "\" stroke-width=\"1.8\"/>\n";
        os << "<text x=\"" << fmt(lx - 92) << "\" y=\"" << fmt(y + 4) << "\">"
           << xml_escape(spec.series[si].label) << "</text>\n";
    }

    if (!spec.title.empty())
        os << "<text x=\"" << spec.width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
           << "font-size=\"15\">" << xml_escape(spec.title) << "</text>\n";
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << spec.height - 8
       << "\" text-anchor=\"middle\">" << xml_escape(spec.x_label) << "</text>\n";
    os << "<text x=\"14\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
       << mt + ph / 2 << ")\">" << xml_escape(spec.y_label) << "</text>\n";
    os << "</g>\n</svg>\n";
    return os.str();
}

void write_svg_plot(const PlotSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << render_svg_plot(spec);
}

} // namespace objnerf
