#include "sirhjb/plot.hpp"

#include "sirhjb/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace sirhjb {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

// Tick spacing of 1, 2, or 5 times a power of ten giving about `target` ticks.
double tick_step(double span, int target) {
    const double raw = span / target;
    const double base = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * base >= raw) return m * base;
    return 10.0 * base;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finish(std::optional<double> fixed_lo, std::optional<double> fixed_hi) {
        if (fixed_lo) lo = *fixed_lo;
        if (fixed_hi) hi = *fixed_hi;
        if (!std::isfinite(lo) || !std::isfinite(hi)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi <= lo) {
            const double pad = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
            lo -= pad;
            hi += pad;
        }
    }
};

} // namespace

void write_svg(const Figure& f, std::ostream& out) {
    Range xr, yr;
    for (const auto& s : f.series) {
        if (s.x.size() != s.y.size()) throw DomainError("plot series '" + s.label + "' has mismatched lengths");
        for (double v : s.x) xr.add(v);
        for (double v : s.y) yr.add(v);
    }
    for (const auto& m : f.markers) {
        xr.add(m.x);
        yr.add(m.y);
    }
    for (const auto& s : f.segments) {
        xr.add(s.x0);
        xr.add(s.x1);
        yr.add(s.y0);
        yr.add(s.y1);
    }
    for (const auto& r : f.rects) {
        xr.add(r.x0);
        xr.add(r.x1);
        yr.add(r.y0);
        yr.add(r.y1);
    }
    xr.finish(f.x_min, f.x_max);
    yr.finish(f.y_min, f.y_max);

    const double left = 70.0, right = 180.0, top = 40.0, bottom = 55.0;
    const double pw = f.width - left - right, ph = f.height - top - bottom;
    auto X = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto Y = [&](double y) { return top + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * ph; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(f.width) << "\" height=\"" << fmt(f.height)
        << "\" viewBox=\"0 0 " << fmt(f.width) << " " << fmt(f.height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(f.title)
        << "</text>\n";
    out << "<defs><clipPath id=\"plot-area\"><rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw)
        << "\" height=\"" << fmt(ph) << "\"/></clipPath></defs>\n";

    // Axes and ticks.
    out << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
    out << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
        << "\"/>\n</g>\n";
    out << "<g class=\"ticks\">\n";
    const double xs = tick_step(xr.hi - xr.lo, 8), ys = tick_step(yr.hi - yr.lo, 6);
    for (double v = std::ceil(xr.lo / xs) * xs; v <= xr.hi + 1e-9 * xs; v += xs) {
        const double px = X(v);
        out << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(px) << "\" y2=\""
            << fmt(top + ph + 5) << "\" stroke=\"black\"/>";
        out << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(top + ph + 18) << "\" text-anchor=\"middle\">"
            << fmt(std::abs(v) < 1e-12 * xs ? 0.0 : v) << "</text>\n";
    }
    for (double v = std::ceil(yr.lo / ys) * ys; v <= yr.hi + 1e-9 * ys; v += ys) {
        const double py = Y(v);
        out << "<line x1=\"" << fmt(left - 5) << "\" y1=\"" << fmt(py) << "\" x2=\"" << fmt(left) << "\" y2=\"" << fmt(py)
            << "\" stroke=\"black\"/>";
        out << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(py + 4) << "\" text-anchor=\"end\">"
            << fmt(std::abs(v) < 1e-12 * ys ? 0.0 : v) << "</text>\n";
    }
    out << "</g>\n";
    out << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(f.height - 12) << "\" text-anchor=\"middle\">"
        << escape(f.x_label) << "</text>\n";
    out << "<text x=\"16\" y=\"" << fmt(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << fmt(top + ph / 2) << ")\">" << escape(f.y_label) << "</text>\n";

    out << "<g clip-path=\"url(#plot-area)\">\n";
    for (const auto& r : f.rects) {
        const double x0 = X(std::min(r.x0, r.x1)), x1 = X(std::max(r.x0, r.x1));
        const double y0 = Y(std::max(r.y0, r.y1)), y1 = Y(std::min(r.y0, r.y1));
        out << "<rect class=\"region\" x=\"" << fmt(x0) << "\" y=\"" << fmt(y0) << "\" width=\"" << fmt(x1 - x0)
            << "\" height=\"" << fmt(y1 - y0) << "\" fill=\"" << r.fill << "\" fill-opacity=\"" << fmt(r.opacity)
            << "\"/>\n";
    }
    for (const auto& s : f.series) {
        out << "<polyline class=\"series\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"" << fmt(s.width)
            << "\" points=\"";
        for (std::size_t k = 0; k < s.x.size(); ++k) out << (k ? " " : "") << fmt(X(s.x[k])) << "," << fmt(Y(s.y[k]));
        out << "\"/>\n";
    }
    for (const auto& s : f.segments) {
        out << "<line class=\"segment\" x1=\"" << fmt(X(s.x0)) << "\" y1=\"" << fmt(Y(s.y0)) << "\" x2=\"" << fmt(X(s.x1))
            << "\" y2=\"" << fmt(Y(s.y1)) << "\" stroke=\"" << s.color << "\" stroke-width=\"" << fmt(s.width) << "\""
            << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    }
    out << "</g>\n";
    for (const auto& m : f.markers) {
        char data[96];
        std::snprintf(data, sizeof data, "data-x=\"%.17g\" data-y=\"%.17g\"", m.x, m.y);
        out << "<circle class=\"marker\" id=\"marker-" << escape(m.id) << "\" " << data << " cx=\"" << fmt(X(m.x))
            << "\" cy=\"" << fmt(Y(m.y)) << "\" r=\"5\" fill=\"" << m.color << "\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << fmt(X(m.x)) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(X(m.x)) << "\" y2=\""
            << fmt(top + ph) << "\" stroke=\"" << m.color << "\" stroke-dasharray=\"2 3\"/>\n";
    }

    // Legend.
    double ly = top + 10.0;
    const double lx = left + pw + 15.0;
    auto entry = [&](const std::string& label, const std::string& swatch) {
        if (label.empty()) return;
        out << swatch << "<text x=\"" << fmt(lx + 26) << "\" y=\"" << fmt(ly + 4) << "\">" << escape(label) << "</text>\n";
        ly += 20.0;
    };
    out << "<g class=\"legend\">\n";
    for (const auto& r : f.rects)
        entry(r.label, "<rect x=\"" + fmt(lx) + "\" y=\"" + fmt(ly - 6) + "\" width=\"20\" height=\"12\" fill=\"" + r.fill +
                           "\" fill-opacity=\"" + fmt(std::max(r.opacity, 0.3)) + "\"/>");
    for (const auto& s : f.series)
        entry(s.label, "<line x1=\"" + fmt(lx) + "\" y1=\"" + fmt(ly) + "\" x2=\"" + fmt(lx + 20) + "\" y2=\"" + fmt(ly) +
                           "\" stroke=\"" + s.color + "\" stroke-width=\"2\"/>");
    for (const auto& s : f.segments)
        entry(s.label, "<line x1=\"" + fmt(lx) + "\" y1=\"" + fmt(ly) + "\" x2=\"" + fmt(lx + 20) + "\" y2=\"" + fmt(ly) +
                           "\" stroke=\"" + s.color + "\" stroke-width=\"3\"" +
                           (s.dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>");
    for (const auto& m : f.markers)
        entry(m.label, "<circle cx=\"" + fmt(lx + 10) + "\" cy=\"" + fmt(ly) + "\" r=\"5\" fill=\"" + m.color +
                           "\" stroke=\"black\"/>");
    out << "</g>\n</svg>\n";
}

} // namespace sirhjb
