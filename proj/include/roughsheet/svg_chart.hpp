#pragma once

// Minimal standalone SVG log-log line chart: data series with markers, a
// fitted line and a guide line of the theoretical slope.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "roughsheet/errors.hpp"
#include "roughsheet/table.hpp"

namespace roughsheet {

struct ChartSeries {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool markers = true;
  bool dashed = false;
};

struct LogLogChart {
  std::string title;
  std::string xLabel = "lag";
  std::string yLabel = "value";
  std::vector<ChartSeries> series;

  // line y = exp(intercept) x^slope over the x range of the data
  void add_power_line(const std::string& label, double slope, double intercept, const std::string& color,
                      bool dashed) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& s : series)
      for (double v : s.x) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    if (!(hi > 0.0)) return;
    ChartSeries s;
    s.label = label;
    s.color = color;
    s.markers = false;
    s.dashed = dashed;
    for (double v : {lo, hi}) {
      s.x.push_back(v);
      s.y.push_back(std::exp(intercept + slope * std::log(v)));
    }
    series.push_back(std::move(s));
  }

  std::string render(int width = 640, int height = 440) const {
    const double left = 70, right = 20, top = 40, bottom = 55;
    double xlo = std::numeric_limits<double>::infinity(), xhi = 0.0;
    double ylo = std::numeric_limits<double>::infinity(), yhi = 0.0;
    for (const auto& s : series)
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!(s.x[i] > 0.0 && s.y[i] > 0.0)) continue;
        xlo = std::min(xlo, s.x[i]);
        xhi = std::max(xhi, s.x[i]);
        ylo = std::min(ylo, s.y[i]);
        yhi = std::max(yhi, s.y[i]);
      }
    if (!(xhi > 0.0)) throw FormatError("chart: no positive data to plot");
    const double lx0 = std::floor(std::log10(xlo) * 4.0) / 4.0, lx1 = std::ceil(std::log10(xhi) * 4.0) / 4.0 + 1e-9;
    const double ly0 = std::floor(std::log10(ylo) * 4.0) / 4.0, ly1 = std::ceil(std::log10(yhi) * 4.0) / 4.0 + 1e-9;
    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double v) { return left + (std::log10(v) - lx0) / (lx1 - lx0) * pw; };
    auto py = [&](double v) { return top + (ly1 - std::log10(v)) / (ly1 - ly0) * ph; };

    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int e = static_cast<int>(std::ceil(lx0)); e <= static_cast<int>(std::floor(lx1)); ++e) {
      const double x = px(std::pow(10.0, e));
      o << "<line x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x << "\" y2=\"" << top + ph
        << "\" stroke=\"#ddd\"/>\n";
      o << "<text x=\"" << x << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">1e" << e << "</text>\n";
    }
    for (int e = static_cast<int>(std::ceil(ly0)); e <= static_cast<int>(std::floor(ly1)); ++e) {
      const double y = py(std::pow(10.0, e));
      o << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << left + pw << "\" y2=\"" << y
        << "\" stroke=\"#ddd\"/>\n";
      o << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e" << e << "</text>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
      << escape(xLabel) << "</text>\n";
    o << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(yLabel) << "</text>\n";
    double legendY = top + 14;
    for (const auto& s : series) {
      std::ostringstream pts;
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (s.x[i] > 0.0 && s.y[i] > 0.0) pts << format_double(px(s.x[i])) << ',' << format_double(py(s.y[i])) << ' ';
      o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
        << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"" << pts.str() << "\"/>\n";
      if (s.markers)
        for (std::size_t i = 0; i < s.x.size(); ++i)
          if (s.x[i] > 0.0 && s.y[i] > 0.0)
            o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << s.color
              << "\"/>\n";
      o << "<line x1=\"" << left + 10 << "\" y1=\"" << legendY << "\" x2=\"" << left + 34 << "\" y2=\"" << legendY
        << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "")
        << "/>\n";
      o << "<text x=\"" << left + 40 << "\" y=\"" << legendY + 4 << "\">" << escape(s.label) << "</text>\n";
      legendY += 16;
    }
    o << "</svg>\n";
    return o.str();
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot write chart " + path);
    os << render();
  }

 private:
  static std::string escape(const std::string& s) {
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
};

}  // namespace roughsheet
