#pragma once

// Report serialization: JSON fragments for rate intervals and CSV for
// curve bands. All numbers are rendered with shortest-round-trip precision
// so reruns with the same seed are byte-identical.

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "respaudit/curves.hpp"
#include "respaudit/errors.hpp"
#include "respaudit/identification.hpp"
#include "respaudit/io.hpp"

namespace respaudit {

using ordered_json = nlohmann::ordered_json;

/// {group, B, tpr: [lo,hi], tnr: [lo,hi], point: {tpr,tnr}, degenerate}.
/// A degenerate fragment carries the reason instead of numbers.
inline ordered_json interval_fragment(const std::string& group, double B,
                                      const RateBounds& rb, const PointRates& pr) {
  ordered_json j;
  j["group"] = group;
  j["B"] = B;
  j["tpr"] = {rb.tpr.lower, rb.tpr.upper};
  j["tnr"] = {rb.tnr.lower, rb.tnr.upper};
  j["point"] = {{"tpr", pr.tpr}, {"tnr", pr.tnr}};
  j["degenerate"] = false;
  return j;
}

inline ordered_json degenerate_fragment(const std::string& group, double B,
                                        const std::string& reason) {
  ordered_json j;
  j["group"] = group;
  j["B"] = B;
  j["tpr"] = nullptr;
  j["tnr"] = nullptr;
  j["point"] = nullptr;
  j["degenerate"] = true;
  j["reason"] = reason;
  return j;
}

/// CSV rendering of a band: one row per threshold; gap rows leave the
/// coordinate fields empty and set gap_flag.
inline std::string band_csv(const CurveBand& band) {
  std::ostringstream out;
  out << "theta,x_lower,y_lower,x_upper,y_upper,gap_flag\n";
  for (std::size_t i = 0; i < band.size(); ++i) {
    out << detail::format_double(band.thresholds[i]) << ',';
    if (band.gap[i]) {
      out << ",,,,1\n";
    } else {
      out << detail::format_double(band.lower[i].x) << ','
          << detail::format_double(band.lower[i].y) << ','
          << detail::format_double(band.upper[i].x) << ','
          << detail::format_double(band.upper[i].y) << ",0\n";
    }
  }
  return out.str();
}

inline void write_band_csv(const CurveBand& band, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open output file '" + path + "'");
  out << band_csv(band);
}

inline void write_json(const ordered_json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open output file '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace respaudit
