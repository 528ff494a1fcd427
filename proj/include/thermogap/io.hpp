#pragma once

#include "thermogap/models.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace thermogap {

/// 17 significant digits, enough to round-trip an IEEE double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

/// JSON number token; non-finite values become null (JSON has no inf/nan).
inline std::string json_number(double x) {
  if (!std::isfinite(x)) return "null";
  return format_double(x);
}

/// Inclusive grid "start:stop:step" (endpoints within half-step tolerance);
/// a bare number is a single-point grid.
inline std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::string token;
  std::istringstream ss(text);
  while (std::getline(ss, token, ':')) {
    size_t used = 0;
    double v;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("parse_grid: bad number '" + token + "'");
    }
    if (used != token.size())
      throw std::invalid_argument("parse_grid: bad number '" + token + "'");
    parts.push_back(v);
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3)
    throw std::invalid_argument(
        "parse_grid: expected 'start:stop:step' or a single value");
  const double start = parts[0], stop = parts[1], step = parts[2];
  if (step == 0 || (stop - start) * step < 0)
    throw std::invalid_argument("parse_grid: step does not reach stop");
  std::vector<double> grid;
  const long n = std::lround((stop - start) / step);
  for (long i = 0; i <= n; ++i) {
    const double v = start + static_cast<double>(i) * step;
    if ((step > 0 && v > stop + 0.5 * step) ||
        (step < 0 && v < stop + 0.5 * step))
      break;
    grid.push_back(v);
  }
  return grid;
}

/// Output record: metadata (pre-serialized JSON values, insertion-ordered for
/// byte-identical output) plus a sweep table.
struct OutputRecord {
  std::vector<std::pair<std::string, std::string>> meta;  // key -> JSON value
  SweepTable table;

  void meta_str(const std::string& k, const std::string& v) {
    meta.emplace_back(k, "\"" + json_escape(v) + "\"");
  }
  void meta_num(const std::string& k, double v) {
    meta.emplace_back(k, json_number(v));
  }
  void meta_int(const std::string& k, long long v) {
    meta.emplace_back(k, std::to_string(v));
  }
  void meta_raw(const std::string& k, const std::string& raw_json) {
    meta.emplace_back(k, raw_json);
  }
};

inline bool any_row_error(const SweepTable& t) {
  for (const auto& e : t.row_errors)
    if (!e.empty()) return true;
  return false;
}

inline void write_json(std::ostream& os, const OutputRecord& rec,
                       const std::vector<std::string>& extra_row_json = {}) {
  os << "{\n  \"meta\": {";
  bool first = true;
  for (const auto& [k, v] : rec.meta) {
    os << (first ? "" : ", ") << "\"" << json_escape(k) << "\": " << v;
    first = false;
  }
  os << "},\n  \"rows\": [";
  const auto& t = rec.table;
  for (size_t r = 0; r < t.rows.size(); ++r) {
    os << (r == 0 ? "\n" : ",\n") << "    {";
    for (size_t c = 0; c < t.columns.size(); ++c) {
      os << (c == 0 ? "" : ", ") << "\"" << json_escape(t.columns[c])
         << "\": " << json_number(t.rows[r][c]);
    }
    if (r < extra_row_json.size() && !extra_row_json[r].empty())
      os << ", " << extra_row_json[r];
    if (!t.row_errors[r].empty())
      os << ", \"error\": \"" << json_escape(t.row_errors[r]) << "\"";
    os << "}";
  }
  os << "\n  ]\n}\n";
}

inline void write_csv(std::ostream& os, const SweepTable& t) {
  const bool with_error = any_row_error(t);
  for (size_t c = 0; c < t.columns.size(); ++c)
    os << (c == 0 ? "" : ",") << t.columns[c];
  if (with_error) os << ",error";
  os << "\n";
  for (size_t r = 0; r < t.rows.size(); ++r) {
    for (size_t c = 0; c < t.rows[r].size(); ++c)
      os << (c == 0 ? "" : ",") << format_double(t.rows[r][c]);
    if (with_error) os << "," << t.row_errors[r];
    os << "\n";
  }
}

}  // namespace thermogap
