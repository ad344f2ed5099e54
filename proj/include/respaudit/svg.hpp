#pragma once

// Minimal SVG writer for band plots: axes, polylines for the lower and
// upper curves, and a shaded polygon between them. One band per budget is
// overlaid with opacity keyed to B (wider budgets are fainter).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "respaudit/curves.hpp"
#include "respaudit/errors.hpp"

namespace respaudit {
namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct PlotFrame {
  double width = 560.0, height = 480.0;
  double left = 64.0, right = 20.0, top = 40.0, bottom = 52.0;
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;

  double px(double x) const {
    return left + (x - x_min) / (x_max - x_min) * (width - left - right);
  }
  double py(double y) const {
    return top + (y_max - y) / (y_max - y_min) * (height - top - bottom);
  }
};

/// Finite plot coordinates: infinite thresholds are clamped to the frame
/// edge so sentinel points stay visible.
inline double clamp_finite(double v, double lo, double hi) {
  if (std::isnan(v)) return lo;
  return std::min(hi, std::max(lo, v));
}

inline void band_runs(const CurveBand& band,
                      std::vector<std::pair<std::size_t, std::size_t>>& runs) {
  runs.clear();
  std::size_t i = 0;
  while (i < band.size()) {
    if (band.gap[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < band.size() && !band.gap[j + 1]) ++j;
    runs.push_back({i, j});
    i = j + 1;
  }
}

}  // namespace detail

/// Renders bands (same kind, typically one per budget) into one plot.
inline std::string render_band_svg(std::span<const CurveBand> bands,
                                   const std::string& title, const std::string& x_label,
                                   const std::string& y_label) {
  if (bands.empty()) throw ConfigError("no bands to plot");
  detail::PlotFrame f;
  const bool roc_like =
      bands.front().kind == CurveKind::kRoc || bands.front().kind == CurveKind::kXroc;
  if (!roc_like) {
    // Fit the frame to the finite thresholds and band values.
    double xm = std::numeric_limits<double>::infinity(), xM = -xm;
    double ym = 0.0, yM = 0.0;
    for (const auto& b : bands)
      for (std::size_t i = 0; i < b.size(); ++i) {
        if (std::isfinite(b.thresholds[i])) {
          xm = std::min(xm, b.thresholds[i]);
          xM = std::max(xM, b.thresholds[i]);
        }
        if (!b.gap[i]) {
          ym = std::min(ym, b.lower[i].y);
          yM = std::max(yM, b.upper[i].y);
        }
      }
    if (!std::isfinite(xm)) {
      xm = 0.0;
      xM = 1.0;
    }
    if (xm == xM) {
      xm -= 0.5;
      xM += 0.5;
    }
    const double xpad = 0.06 * (xM - xm);
    const double ypad = std::max(0.05, 0.08 * (yM - ym));
    f.x_min = xm - xpad;
    f.x_max = xM + xpad;
    f.y_min = ym - ypad;
    f.y_max = yM + ypad;
  }

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\""
      << f.height << "\" viewBox=\"0 0 " << f.width << ' ' << f.height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << f.width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

  // Axes with simple endpoint ticks.
  const double x0 = f.px(f.x_min), x1 = f.px(f.x_max);
  const double y0 = f.py(f.y_min), y1 = f.py(f.y_max);
  svg << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
      << "\" stroke=\"black\"/>\n";
  for (double t : {0.0, 0.5, 1.0}) {
    const double xv = f.x_min + t * (f.x_max - f.x_min);
    const double yv = f.y_min + t * (f.y_max - f.y_min);
    svg << "<text x=\"" << f.px(xv) << "\" y=\"" << y0 + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << detail::svg_num(xv) << "</text>\n";
    svg << "<text x=\"" << x0 - 8 << "\" y=\"" << f.py(yv) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << detail::svg_num(yv) << "</text>\n";
  }
  svg << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << f.height - 10
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
      << "</text>\n";
  svg << "<text x=\"16\" y=\"" << (y0 + y1) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << (y0 + y1) / 2 << ")\">" << y_label << "</text>\n";
  if (!roc_like && f.y_min < 0.0 && f.y_max > 0.0)
    svg << "<line x1=\"" << x0 << "\" y1=\"" << f.py(0.0) << "\" x2=\"" << x1 << "\" y2=\""
        << f.py(0.0) << "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";

  double max_b = 0.0;
  for (const auto& b : bands) max_b = std::max(max_b, b.B);
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (const auto& band : bands) {
    // Wider budgets are drawn fainter; B=0 is a bare curve.
    const double rel = max_b > 0.0 ? band.B / max_b : 0.0;
    const double opacity = band.B == 0.0 ? 0.0 : 0.38 - 0.22 * rel;
    detail::band_runs(band, runs);
    auto coord = [&](const CurvePoint& p, double theta) {
      const double vx = roc_like ? p.x : theta;
      return std::pair{f.px(detail::clamp_finite(vx, f.x_min, f.x_max)),
                       f.py(detail::clamp_finite(p.y, f.y_min, f.y_max))};
    };
    for (const auto& [s, e] : runs) {
      if (opacity > 0.0 && e > s) {
        svg << "<polygon fill=\"#2166ac\" fill-opacity=\"" << detail::svg_num(opacity)
            << "\" stroke=\"none\" points=\"";
        for (std::size_t i = s; i <= e; ++i) {
          const auto [cx, cy] = coord(band.upper[i], band.thresholds[i]);
          svg << detail::svg_num(cx) << ',' << detail::svg_num(cy) << ' ';
        }
        for (std::size_t i = e + 1; i-- > s;) {
          const auto [cx, cy] = coord(band.lower[i], band.thresholds[i]);
          svg << detail::svg_num(cx) << ',' << detail::svg_num(cy) << ' ';
        }
        svg << "\"/>\n";
      }
      for (const auto* curve : {&band.lower, &band.upper}) {
        svg << "<polyline fill=\"none\" stroke=\"#2166ac\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = s; i <= e; ++i) {
          const auto [cx, cy] = coord((*curve)[i], band.thresholds[i]);
          svg << detail::svg_num(cx) << ',' << detail::svg_num(cy) << ' ';
        }
        svg << "\"/>\n";
        if (band.B == 0.0) break;  // lower == upper, draw once
      }
    }
    // Legend entry.
    const std::size_t li = static_cast<std::size_t>(&band - bands.data());
    const double ly = f.top + 14.0 * static_cast<double>(li);
    svg << "<rect x=\"" << x1 - 88 << "\" y=\"" << ly - 9
        << "\" width=\"12\" height=\"9\" fill=\"#2166ac\" fill-opacity=\""
        << detail::svg_num(std::max(opacity, 0.08)) << "\"/>\n";
    svg << "<text x=\"" << x1 - 72 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"11\">B=" << detail::svg_num(band.B)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

inline void write_band_svg(std::span<const CurveBand> bands, const std::string& title,
                           const std::string& x_label, const std::string& y_label,
                           const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  out << render_band_svg(bands, title, x_label, y_label);
}

}  // namespace respaudit
