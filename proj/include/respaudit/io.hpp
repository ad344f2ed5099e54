#pragma once

// Delimited-text ingest and serialization for unit records.
//
// Files are plain delimited text with a header row. Required columns hold
// the unit id, group label, treatment arm and outcome; optional columns
// hold precomputed scores (mu0, mu1, tau). Every remaining column that is
// not explicitly excluded is treated as a numeric feature. Fields must not
// contain the delimiter; there is no quoting. Missing values are errors.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "respaudit/dataset.hpp"
#include "respaudit/errors.hpp"

namespace respaudit {

struct ColumnSchema {
  std::string id = "id";
  std::string group = "group";
  std::string treatment = "treatment";
  std::string outcome = "outcome";
  std::string mu0 = "mu0";
  std::string mu1 = "mu1";
  std::string tau = "tau";
  std::vector<std::string> exclude;  // columns dropped entirely
  char delimiter = ',';
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return v;
}

/// Shortest-round-trip-safe decimal rendering of a double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parses a delimited stream into a Dataset. `source` names the stream in
/// error messages. Data rows are numbered from 1 (the header is line 1, so
/// row N sits on line N+1).
inline Dataset ingest_stream(std::istream& in, const ColumnSchema& schema = {},
                             const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError(source + ": empty input, expected a header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = detail::split_fields(line, schema.delimiter);
  constexpr std::size_t kAbsent = static_cast<std::size_t>(-1);
  auto find_col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return kAbsent;
  };

  const std::size_t col_id = find_col(schema.id);
  const std::size_t col_group = find_col(schema.group);
  const std::size_t col_treat = find_col(schema.treatment);
  const std::size_t col_outcome = find_col(schema.outcome);
  for (auto&& [idx, name] : {std::pair{col_id, schema.id},
                             {col_group, schema.group},
                             {col_treat, schema.treatment},
                             {col_outcome, schema.outcome}}) {
    if (idx == kAbsent)
      throw ValidationError(source + ": missing required column '" + name + "'");
  }
  const std::size_t col_mu0 = find_col(schema.mu0);
  const std::size_t col_mu1 = find_col(schema.mu1);
  const std::size_t col_tau = find_col(schema.tau);

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i == col_id || i == col_group || i == col_treat || i == col_outcome ||
        i == col_mu0 || i == col_mu1 || i == col_tau)
      continue;
    bool excluded = false;
    for (const auto& e : schema.exclude) excluded = excluded || e == header[i];
    if (excluded) continue;
    if (header[i].empty())
      throw ValidationError(source + ": empty column name in header");
    feature_cols.push_back(i);
    feature_names.push_back(header[i]);
  }

  std::vector<UnitRecord> records;
  std::size_t row = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const std::string where =
        source + ": row " + std::to_string(row) + " (line " + std::to_string(lineno) + ")";
    const auto fields = detail::split_fields(line, schema.delimiter);
    if (fields.size() != header.size())
      throw ValidationError(where + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(fields.size()));

    auto field = [&](std::size_t idx, const std::string& name) -> const std::string& {
      if (fields[idx].empty())
        throw ValidationError(where + ": empty value in column '" + name + "'");
      return fields[idx];
    };
    auto numeric = [&](std::size_t idx, const std::string& name) {
      auto v = detail::parse_double(field(idx, name));
      if (!v)
        throw ValidationError(where + ": value '" + fields[idx] +
                              "' in column '" + name + "' is not numeric");
      return *v;
    };
    auto binary = [&](std::size_t idx, const std::string& name) {
      const double v = numeric(idx, name);
      if (v != 0.0 && v != 1.0)
        throw ValidationError(where + ": value '" + fields[idx] + "' in column '" +
                              name + "' is not binary");
      return static_cast<int>(v);
    };

    UnitRecord r;
    r.unit_id = field(col_id, schema.id);
    r.group = field(col_group, schema.group);
    r.treatment = binary(col_treat, schema.treatment);
    r.outcome = binary(col_outcome, schema.outcome);
    auto score = [&](std::size_t idx, const std::string& name) -> std::optional<double> {
      if (idx == kAbsent) return std::nullopt;
      const double v = numeric(idx, name);
      if (name != schema.tau && (v < 0.0 || v > 1.0))
        throw ValidationError(where + ": score out of range in column '" + name + "'");
      return v;
    };
    r.mu0_hat = score(col_mu0, schema.mu0);
    r.mu1_hat = score(col_mu1, schema.mu1);
    r.tau_hat = score(col_tau, schema.tau);
    if (r.mu0_hat && r.mu1_hat) {
      if (r.tau_hat) {
        if (std::fabs(*r.tau_hat - (*r.mu1_hat - *r.mu0_hat)) > kTauConsistencyTol)
          throw ValidationError(where + ": tau is inconsistent with mu1 - mu0");
      } else {
        r.tau_hat = *r.mu1_hat - *r.mu0_hat;
      }
    }
    for (std::size_t k = 0; k < feature_cols.size(); ++k)
      r.features.push_back(numeric(feature_cols[k], feature_names[k]));
    records.push_back(std::move(r));
  }

  try {
    return Dataset(std::move(records), std::move(feature_names));
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
}

inline Dataset ingest(const std::string& path, const ColumnSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open input file '" + path + "'");
  return ingest_stream(in, schema, path);
}

/// Serializes a dataset back to delimited text. Score columns are written
/// only when every record carries them; partially scored datasets do not
/// have a faithful flat representation.
inline void write_delimited(const Dataset& ds, std::ostream& out,
                            const ColumnSchema& schema = {}) {
  const char d = schema.delimiter;
  bool any_scores = false;
  for (const auto& r : ds.records())
    any_scores = any_scores || r.mu0_hat || r.mu1_hat || r.tau_hat;
  const bool with_scores = ds.scored();
  if (any_scores && !with_scores)
    throw ValidationError("cannot serialize a partially scored dataset");

  out << schema.id << d << schema.group << d << schema.treatment << d << schema.outcome;
  if (with_scores) out << d << schema.mu0 << d << schema.mu1 << d << schema.tau;
  for (const auto& name : ds.feature_names()) out << d << name;
  out << '\n';
  for (const auto& r : ds.records()) {
    out << r.unit_id << d << r.group << d << r.treatment << d << r.outcome;
    if (with_scores)
      out << d << detail::format_double(*r.mu0_hat) << d
          << detail::format_double(*r.mu1_hat) << d << detail::format_double(*r.tau_hat);
    for (double x : r.features) out << d << detail::format_double(x);
    out << '\n';
  }
}

inline void write_delimited(const Dataset& ds, const std::string& path,
                            const ColumnSchema& schema = {}) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file '" + path + "'");
  write_delimited(ds, out, schema);
}

}  // namespace respaudit
