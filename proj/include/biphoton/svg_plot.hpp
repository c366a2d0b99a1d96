#pragma once

// Minimal static SVG line charts for the sweep outputs. CSV remains the
// source of truth; these are desk-scale visual checks only.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

namespace biphoton {

struct SvgSeries {
  std::string label;
  std::string color = "#1f77b4";
  std::vector<std::pair<double, double>> points;
};

class SvgChart {
 public:
  SvgChart(std::string title, std::string x_label, std::string y_label)
      : title_(std::move(title)), x_label_(std::move(x_label)),
        y_label_(std::move(y_label)) {}

  void add(SvgSeries s) { series_.push_back(std::move(s)); }

  void write(std::ostream& os) const {
    const double w = 640, h = 420, ml = 70, mr = 20, mt = 40, mb = 50;
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series_)
      for (auto [x, y] : s.points) {
        x0 = std::min(x0, x); x1 = std::max(x1, x);
        y0 = std::min(y0, y); y1 = std::max(y1, y);
      }
    if (!(x1 > x0)) { x0 -= 1; x1 += 1; }
    if (!(y1 > y0)) { y0 -= 1; y1 += 1; }
    double ypad = 0.05 * (y1 - y0);
    y0 -= ypad; y1 += ypad;
    auto sx = [&](double x) { return ml + (x - x0) / (x1 - x0) * (w - ml - mr); };
    auto sy = [&](double y) { return h - mb - (y - y0) / (y1 - y0) * (h - mt - mb); };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
       << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" "
          "font-size=\"15\">" << title_ << "</text>\n";
    // frame and ticks
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr
       << "\" height=\"" << h - mt - mb << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
      double x = x0 + (x1 - x0) * i / 5.0, y = y0 + (y1 - y0) * i / 5.0;
      char b[256];
      std::snprintf(b, sizeof b,
                    "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                    "stroke=\"black\"/><text x=\"%.1f\" y=\"%.1f\" "
                    "text-anchor=\"middle\">%.4g</text>\n",
                    sx(x), h - mb, sx(x), h - mb + 5, sx(x), h - mb + 20, x);
      os << b;
      std::snprintf(b, sizeof b,
                    "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                    "stroke=\"black\"/><text x=\"%.1f\" y=\"%.1f\" "
                    "text-anchor=\"end\">%.4g</text>\n",
                    ml - 5, sy(y), ml, sy(y), ml - 8, sy(y) + 4, y);
      os << b;
    }
    os << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 10
       << "\" text-anchor=\"middle\">" << x_label_ << "</text>\n";
    os << "<text x=\"16\" y=\"" << (mt + h - mb) / 2
       << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << (mt + h - mb) / 2 << ")\">" << y_label_ << "</text>\n";

    double ly = mt + 14;
    for (const auto& s : series_) {
      os << "<polyline fill=\"none\" stroke=\"" << s.color
         << "\" stroke-width=\"1.5\" points=\"";
      for (auto [x, y] : s.points) {
        char b[64];
        std::snprintf(b, sizeof b, "%.1f,%.1f ", sx(x), sy(y));
        os << b;
      }
      os << "\"/>\n";
      for (auto [x, y] : s.points) {
        char b[128];
        std::snprintf(b, sizeof b,
                      "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"2.5\" fill=\"%s\"/>\n",
                      sx(x), sy(y), s.color.c_str());
        os << b;
      }
      os << "<text x=\"" << w - mr - 8 << "\" y=\"" << ly
         << "\" text-anchor=\"end\" fill=\"" << s.color << "\">" << s.label
         << "</text>\n";
      ly += 16;
    }
    os << "</svg>\n";
  }

 private:
  std::string title_, x_label_, y_label_;
  std::vector<SvgSeries> series_;
};

}  // namespace biphoton
