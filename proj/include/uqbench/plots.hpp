#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "uqbench/bench.hpp"
#include "uqbench/io.hpp"

namespace uqbench::plots {

namespace fs = std::filesystem;

namespace detail {

// Fixed-precision numbers keep the SVG bytes stable.
inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

inline std::string escape(const std::string& s) {
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

inline const char* color(bench::Method m) {
    switch (m) {
        case bench::Method::PceRegression: return "#1f77b4";
        case bench::Method::PceQuadrature: return "#2ca02c";
        case bench::Method::GpSquaredExponential: return "#d62728";
        case bench::Method::GpMatern: return "#9467bd";
    }
    return "#000000";
}

struct Frame {
    double width = 560, height = 360;
    double left = 70, right = 150, top = 40, bottom = 50;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

    double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
    double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

inline void pad_range(double& lo, double& hi) {
    if (!(hi > lo)) {
        const double d = std::max(std::abs(lo) * 0.1, 1e-3);
        lo -= d;
        hi += d;
    }
    const double d = 0.05 * (hi - lo);
    lo -= d;
    hi += d;
}

inline std::string header(const Frame& f, const std::string& title, const std::string& xlabel, const std::string& ylabel) {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(f.width) + "\" height=\"" + num(f.height) +
                    "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(f.width / 2 - f.right / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" +
         escape(title) + "</text>\n";
    const double bx = f.height - f.bottom;
    s += "<line x1=\"" + num(f.left) + "\" y1=\"" + num(bx) + "\" x2=\"" + num(f.width - f.right) + "\" y2=\"" + num(bx) +
         "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + num(f.left) + "\" y1=\"" + num(f.top) + "\" x2=\"" + num(f.left) + "\" y2=\"" + num(bx) +
         "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double yv = f.y0 + (f.y1 - f.y0) * k / 4.0;
        s += "<text x=\"" + num(f.left - 6) + "\" y=\"" + num(f.py(yv) + 4) + "\" text-anchor=\"end\">" + label(yv) +
             "</text>\n";
        s += "<line x1=\"" + num(f.left - 3) + "\" y1=\"" + num(f.py(yv)) + "\" x2=\"" + num(f.left) + "\" y2=\"" +
             num(f.py(yv)) + "\" stroke=\"black\"/>\n";
    }
    s += "<text x=\"" + num((f.left + f.width - f.right) / 2) + "\" y=\"" + num(f.height - 12) +
         "\" text-anchor=\"middle\">" + escape(xlabel) + "</text>\n";
    s += "<text x=\"16\" y=\"" + num((f.top + f.height - f.bottom) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num((f.top + f.height - f.bottom) / 2) + ")\">" + escape(ylabel) + "</text>\n";
    return s;
}

inline std::string legend_entry(const Frame& f, int row, const std::string& color, const std::string& text, bool dashed = false) {
    const double y = f.top + 10 + 18 * row;
    const double x = f.width - f.right + 14;
    return "<line x1=\"" + num(x) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x + 22) + "\" y2=\"" + num(y) + "\" stroke=\"" +
           color + "\" stroke-width=\"2\"" + (dashed ? " stroke-dasharray=\"5,3\"" : "") + "/>\n<text x=\"" + num(x + 28) +
           "\" y=\"" + num(y + 4) + "\">" + escape(text) + "</text>\n";
}

}  // namespace detail

/// Metric against design size for one class: a series per method, interval
/// bars where the method has them, and the simulator value with its bootstrap
/// band as a dashed line over a shaded strip.
inline std::string metric_panel(const bench::RunResult& r, int design_class, const std::string& metric) {
    using detail::num;
    std::map<bench::Method, std::vector<std::pair<std::size_t, validation::IntervalEstimate>>> series;
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
    auto grow_y = [&](double v) {
        if (std::isfinite(v)) {
            ylo = std::min(ylo, v);
            yhi = std::max(yhi, v);
        }
    };
    for (const auto& c : r.cells) {
        if (c.design_class != design_class || !c.report) continue;
        const auto& e = bench::metric(*c.report, metric);
        series[c.method].emplace_back(c.size, e);
        xlo = std::min(xlo, static_cast<double>(c.size));
        xhi = std::max(xhi, static_cast<double>(c.size));
        grow_y(e.point);
        grow_y(e.lo);
        grow_y(e.hi);
    }
    const auto* ref = bench::reference_metric(r.reference, metric);
    if (ref) {
        grow_y(ref->lo);
        grow_y(ref->hi);
        grow_y(ref->point);
    }
    if (!std::isfinite(xlo)) {
        xlo = 0;
        xhi = 1;
    }
    if (!std::isfinite(ylo)) {
        ylo = 0;
        yhi = 1;
    }
    detail::pad_range(xlo, xhi);
    detail::pad_range(ylo, yhi);
    detail::Frame f;
    f.x0 = xlo;
    f.x1 = xhi;
    f.y0 = ylo;
    f.y1 = yhi;

    std::string s = detail::header(f, "class " + std::to_string(design_class) + ": " + metric, "design size m", metric);
    std::set<std::size_t> ticks;
    for (const auto& [m, pts] : series) {
        for (const auto& p : pts) ticks.insert(p.first);
    }
    for (auto m : ticks) {
        const double x = f.px(static_cast<double>(m));
        s += "<text x=\"" + num(x) + "\" y=\"" + num(f.height - f.bottom + 16) + "\" text-anchor=\"middle\">" +
             std::to_string(m) + "</text>\n";
    }
    int row = 0;
    if (ref) {
        const double a = f.py(ref->hi), b = f.py(ref->lo);
        s += "<rect x=\"" + num(f.left) + "\" y=\"" + num(a) + "\" width=\"" + num(f.width - f.right - f.left) +
             "\" height=\"" + num(b - a) + "\" fill=\"#888888\" fill-opacity=\"0.2\"/>\n";
        s += "<line x1=\"" + num(f.left) + "\" y1=\"" + num(f.py(ref->point)) + "\" x2=\"" + num(f.width - f.right) +
             "\" y2=\"" + num(f.py(ref->point)) + "\" stroke=\"#444444\" stroke-dasharray=\"5,3\"/>\n";
        s += detail::legend_entry(f, row++, "#444444", "simulator", true);
    }
    for (const auto& [method, pts] : series) {
        const std::string col = detail::color(method);
        std::string path;
        for (const auto& [m, e] : pts) {
            if (!std::isfinite(e.point)) continue;
            path += (path.empty() ? "" : " ") + num(f.px(static_cast<double>(m))) + "," + num(f.py(e.point));
        }
        s += "<polyline fill=\"none\" stroke=\"" + col + "\" stroke-width=\"1.5\" points=\"" + path + "\"/>\n";
        for (const auto& [m, e] : pts) {
            const double x = f.px(static_cast<double>(m));
            if (e.method != validation::IntervalMethod::None && std::isfinite(e.lo) && std::isfinite(e.hi)) {
                s += "<g class=\"interval-" + std::string(bench::to_string(method)) + "\">\n";
                s += "<line x1=\"" + num(x) + "\" y1=\"" + num(f.py(e.lo)) + "\" x2=\"" + num(x) + "\" y2=\"" +
                     num(f.py(e.hi)) + "\" stroke=\"" + col + "\"/>\n";
                for (double v : {e.lo, e.hi}) {
                    s += "<line x1=\"" + num(x - 4) + "\" y1=\"" + num(f.py(v)) + "\" x2=\"" + num(x + 4) + "\" y2=\"" +
                         num(f.py(v)) + "\" stroke=\"" + col + "\"/>\n";
                }
                s += "</g>\n";
            }
            if (std::isfinite(e.point)) {
                s += "<circle cx=\"" + num(x) + "\" cy=\"" + num(f.py(e.point)) + "\" r=\"3\" fill=\"" + col + "\"/>\n";
            }
        }
        s += detail::legend_entry(f, row++, col, bench::to_string(method));
    }
    return s + "</svg>\n";
}

/// Density curves at the largest design of a class against the simulator's
/// density; GP bands are drawn as shaded envelopes.
inline std::string pdf_panel(const bench::RunResult& r, int design_class) {
    using detail::num;
    std::size_t largest = 0;
    for (const auto& c : r.cells) {
        if (c.design_class == design_class && c.report) largest = std::max(largest, c.size);
    }
    const auto& grid = r.reference.pdf.grid;
    const double xlo = grid.empty() ? 0.0 : grid.front();
    const double xhi = grid.empty() ? 1.0 : grid.back();
    // Surrogate curves may extend past the simulator's window; only the window is drawn.
    auto visible = [&](const std::vector<double>& x, std::size_t g) { return x[g] >= xlo && x[g] <= xhi; };
    double ymax = 0.0;
    for (double v : r.reference.pdf.density) ymax = std::max(ymax, v);
    std::vector<const bench::Cell*> cells;
    for (const auto& c : r.cells) {
        if (c.design_class != design_class || !c.report || c.size != largest) continue;
        cells.push_back(&c);
        const auto& pdf = c.report->pdf;
        for (std::size_t g = 0; g < pdf.grid.size(); ++g) {
            if (!visible(pdf.grid, g)) continue;
            ymax = std::max(ymax, pdf.density[g]);
            if (!pdf.hi.empty()) ymax = std::max(ymax, pdf.hi[g]);
        }
    }
    detail::Frame f;
    f.x0 = xlo;
    f.x1 = xhi;
    f.y0 = 0.0;
    f.y1 = ymax > 0.0 ? 1.05 * ymax : 1.0;
    std::string s = detail::header(f, "class " + std::to_string(design_class) + ": density, m = " + std::to_string(largest),
                                   "output", "density");
    for (int k = 0; k <= 4; ++k) {
        const double xv = f.x0 + (f.x1 - f.x0) * k / 4.0;
        s += "<text x=\"" + num(f.px(xv)) + "\" y=\"" + num(f.height - f.bottom + 16) + "\" text-anchor=\"middle\">" +
             detail::label(xv) + "</text>\n";
    }
    auto polyline = [&](const std::vector<double>& x, const std::vector<double>& y, const std::string& col, bool dashed) {
        std::string path;
        for (std::size_t g = 0; g < x.size() && g < y.size(); ++g) {
            if (!visible(x, g)) continue;
            path += (path.empty() ? "" : " ") + num(f.px(x[g])) + "," + num(f.py(y[g]));
        }
        return "<polyline fill=\"none\" stroke=\"" + col + "\" stroke-width=\"1.5\"" +
               (dashed ? " stroke-dasharray=\"5,3\"" : "") + " points=\"" + path + "\"/>\n";
    };
    int row = 0;
    for (const auto* c : cells) {
        const auto& pdf = c->report->pdf;
        if (pdf.lo.empty()) continue;
        std::string path;
        for (std::size_t g = 0; g < pdf.grid.size(); ++g) {
            if (visible(pdf.grid, g)) path += (path.empty() ? "" : " ") + num(f.px(pdf.grid[g])) + "," + num(f.py(pdf.hi[g]));
        }
        for (std::size_t g = pdf.grid.size(); g-- > 0;) {
            if (visible(pdf.grid, g)) path += " " + num(f.px(pdf.grid[g])) + "," + num(f.py(pdf.lo[g]));
        }
        s += "<polygon fill=\"" + std::string(detail::color(c->method)) + "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"" +
             path + "\"/>\n";
    }
    s += polyline(grid, r.reference.pdf.density, "#444444", true);
    s += detail::legend_entry(f, row++, "#444444", "simulator", true);
    for (const auto* c : cells) {
        s += polyline(c->report->pdf.grid, c->report->pdf.density, detail::color(c->method), false);
        s += detail::legend_entry(f, row++, detail::color(c->method), bench::to_string(c->method));
    }
    return s + "</svg>\n";
}

/// One SVG per (metric, class) plus one density panel per class.
inline std::vector<fs::path> emit_plots(const bench::RunResult& r, const fs::path& dir) {
    std::vector<fs::path> written;
    for (const auto& d : r.designs) {
        for (const auto& metric : bench::metric_names()) {
            const auto path = dir / (metric + "_class" + std::to_string(d.design_class) + ".svg");
            io::write_text(path, metric_panel(r, d.design_class, metric));
            written.push_back(path);
        }
        const auto path = dir / ("pdf_class" + std::to_string(d.design_class) + ".svg");
        io::write_text(path, pdf_panel(r, d.design_class));
        written.push_back(path);
    }
    return written;
}

}  // namespace uqbench::plots
