#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "crowdscale/csv.hpp"
#include "crowdscale/util.hpp"

namespace crowdscale {

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};

/// Minimal static SVG 1.1 polyline chart (optionally log-scaled axes); the
/// config echo goes into an XML comment.
inline void write_svg_chart(const std::string& path,
                            const std::vector<std::string>& echo,
                            const std::string& title,
                            const std::vector<SvgSeries>& series,
                            bool log_x = false, bool log_y = false) {
  const double width = 860, height = 540;
  const double ml = 80, mr = 30, mt = 50, mb = 60;

  auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };

  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (log_x && !(s.x[i] > 0.0)) continue;
      if (log_y && !(s.y[i] > 0.0)) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;

  auto px = [&](double v) {
    return ml + (width - ml - mr) * (tx(v) - x0) / (x1 - x0);
  };
  auto py = [&](double v) {
    return height - mb - (height - mt - mb) * (ty(v) - y0) / (y1 - y0);
  };

  const char* colors[] = {"#1f6fb2", "#d1495b", "#3a7d44",
                          "#8d6a9f", "#c88a2d", "#444444"};
  auto os = open_output(path);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
     << width << "\" height=\"" << height << "\">\n<!--\n";
  for (const auto& line : echo) os << line << "\n";
  os << "-->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

  // axes with five ticks each
  os << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\""
     << width - mr << "\" y2=\"" << height - mb
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
     << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = x0 + (x1 - x0) * t / 4.0;
    const double fy = y0 + (y1 - y0) * t / 4.0;
    const double gx = ml + (width - ml - mr) * t / 4.0;
    const double gy = height - mb - (height - mt - mb) * t / 4.0;
    const double vx = log_x ? std::pow(10.0, fx) : fx;
    const double vy = log_y ? std::pow(10.0, fy) : fy;
    char xb[32], yb[32];
    std::snprintf(xb, sizeof(xb), "%.4g", vx);
    std::snprintf(yb, sizeof(yb), "%.4g", vy);
    os << "<line x1=\"" << gx << "\" y1=\"" << height - mb << "\" x2=\"" << gx
       << "\" y2=\"" << height - mb + 5 << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << gx << "\" y=\"" << height - mb + 20
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"11\">"
       << xb << "</text>\n";
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << gy << "\" x2=\"" << ml
       << "\" y2=\"" << gy << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << ml - 8 << "\" y=\"" << gy + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << yb << "</text>\n";
  }

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = colors[s % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (log_x && !(series[s].x[i] > 0.0)) continue;
      if (log_y && !(series[s].y[i] > 0.0)) continue;
      os << px(series[s].x[i]) << "," << py(series[s].y[i]) << " ";
    }
    os << "\"/>\n";
    os << "<text x=\"" << width - mr - 180 << "\" y=\"" << mt + 18 * (s + 1)
       << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color
       << "\">" << series[s].label << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace crowdscale
