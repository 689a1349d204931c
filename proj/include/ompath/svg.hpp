#pragma once

// Static SVG line and scatter charts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "ompath/errors.hpp"

namespace ompath {

class SvgPlot {
public:
    SvgPlot(std::string title, std::string xlabel, std::string ylabel)
        : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

    SvgPlot& line(std::vector<double> x, std::vector<double> y, std::string color, std::string label = {},
                  bool dashed = false)
    {
        series_.push_back({std::move(x), std::move(y), std::move(color), std::move(label), dashed, false, 0.0});
        return *this;
    }

    SvgPlot& points(std::vector<double> x, std::vector<double> y, std::string color, std::string label = {},
                    double radius = 2.0)
    {
        series_.push_back({std::move(x), std::move(y), std::move(color), std::move(label), false, true, radius});
        return *this;
    }

    void write(const std::filesystem::path& file) const
    {
        std::ofstream out(file, std::ios::binary);
        if (!out) throw ConfigError("cannot write '" + file.string() + "'");
        out << render();
    }

    std::string render() const
    {
        double x0 = inf(), x1 = -inf(), y0 = inf(), y1 = -inf();
        for (const auto& s : series_) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                x0 = std::min(x0, s.x[i]);
                x1 = std::max(x1, s.x[i]);
                y0 = std::min(y0, s.y[i]);
                y1 = std::max(y1, s.y[i]);
            }
        }
        if (!(x0 <= x1)) x0 = 0.0, x1 = 1.0;
        if (!(y0 <= y1)) y0 = 0.0, y1 = 1.0;
        pad(x0, x1);
        pad(y0, y1);

        auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); };
        auto py = [&](double y) { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); };

        std::string s;
        s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight)
             + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
        s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        s += "<text x=\"" + num(kWidth / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + esc(title_)
             + "</text>\n";
        // axes box and ticks
        s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(kWidth - kLeft - kRight)
             + "\" height=\"" + num(kHeight - kTop - kBottom) + "\" fill=\"none\" stroke=\"black\"/>\n";
        for (double t : ticks(x0, x1)) {
            s += "<line x1=\"" + num(px(t)) + "\" y1=\"" + num(kHeight - kBottom) + "\" x2=\"" + num(px(t))
                 + "\" y2=\"" + num(kHeight - kBottom + 5) + "\" stroke=\"black\"/>\n";
            s += "<text x=\"" + num(px(t)) + "\" y=\"" + num(kHeight - kBottom + 18)
                 + "\" text-anchor=\"middle\">" + label(t) + "</text>\n";
        }
        for (double t : ticks(y0, y1)) {
            s += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(py(t)) + "\" x2=\"" + num(kLeft) + "\" y2=\""
                 + num(py(t)) + "\" stroke=\"black\"/>\n";
            s += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(py(t) + 4) + "\" text-anchor=\"end\">" + label(t)
                 + "</text>\n";
        }
        s += "<text x=\"" + num((kLeft + kWidth - kRight) / 2) + "\" y=\"" + num(kHeight - 10)
             + "\" text-anchor=\"middle\">" + esc(xlabel_) + "</text>\n";
        s += "<text transform=\"translate(16," + num((kTop + kHeight - kBottom) / 2)
             + ") rotate(-90)\" text-anchor=\"middle\">" + esc(ylabel_) + "</text>\n";

        int legend_row = 0;
        for (const auto& se : series_) {
            if (se.scatter) {
                for (std::size_t i = 0; i < se.x.size(); ++i) {
                    if (!std::isfinite(se.x[i]) || !std::isfinite(se.y[i])) continue;
                    s += "<circle cx=\"" + num(px(se.x[i])) + "\" cy=\"" + num(py(se.y[i])) + "\" r=\""
                         + num(se.radius) + "\" fill=\"" + se.color + "\"/>\n";
                }
            } else {
                std::string pts;
                for (std::size_t i = 0; i < se.x.size(); ++i) {
                    if (!std::isfinite(se.x[i]) || !std::isfinite(se.y[i])) continue;
                    pts += num(px(se.x[i])) + "," + num(py(se.y[i])) + " ";
                }
                s += "<polyline fill=\"none\" stroke=\"" + se.color + "\" stroke-width=\"1.5\""
                     + (se.dashed ? " stroke-dasharray=\"6,4\"" : "") + " points=\"" + pts + "\"/>\n";
            }
            if (!se.label.empty()) {
                const double ly = kTop + 14 + 16 * legend_row++;
                const double lx = kWidth - kRight - 150;
                s += "<rect x=\"" + num(lx) + "\" y=\"" + num(ly - 8) + "\" width=\"12\" height=\"8\" fill=\""
                     + se.color + "\"/>\n";
                s += "<text x=\"" + num(lx + 18) + "\" y=\"" + num(ly) + "\">" + esc(se.label) + "</text>\n";
            }
        }
        s += "</svg>\n";
        return s;
    }

private:
    struct Series {
        std::vector<double> x, y;
        std::string color, label;
        bool dashed;
        bool scatter;
        double radius;
    };

    static constexpr double kWidth = 720, kHeight = 480, kLeft = 80, kRight = 20, kTop = 36, kBottom = 50;

    static double inf() { return std::numeric_limits<double>::infinity(); }

    static void pad(double& lo, double& hi)
    {
        if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double m = 0.04 * (hi - lo);
        lo -= m;
        hi += m;
    }

    static std::vector<double> ticks(double lo, double hi)
    {
        const double raw = (hi - lo) / 6.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        double step = mag;
        for (double m : {1.0, 2.0, 5.0, 10.0}) {
            step = m * mag;
            if (step >= raw) break;
        }
        std::vector<double> t;
        for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(v);
        return t;
    }

    static std::string num(double v)
    {
        char b[32];
        std::snprintf(b, sizeof b, "%.2f", v);
        return b;
    }

    static std::string label(double v)
    {
        char b[32];
        std::snprintf(b, sizeof b, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
        return b;
    }

    static std::string esc(const std::string& in)
    {
        std::string o;
        for (char c : in) {
            switch (c) {
                case '<': o += "&lt;"; break;
                case '>': o += "&gt;"; break;
                case '&': o += "&amp;"; break;
                default: o += c;
            }
        }
        return o;
    }

    std::string title_, xlabel_, ylabel_;
    std::vector<Series> series_;
};

}  // namespace ompath
