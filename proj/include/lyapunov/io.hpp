#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "lyapunov/exactpadic.hpp"
#include "lyapunov/lyap.hpp"
#include "lyapunov/numerics.hpp"
#include "lyapunov/potential.hpp"

namespace lyapunov::io {

/// One table cell. Doubles carry 17 significant digits in CSV and the
/// shortest round-trip form in JSON, so both re-parse to the same bits.
using Cell = std::variant<std::monostate, bool, std::int64_t, std::uint64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
};

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline Cell cell(const Real& x) { return to_double(x); }
inline Cell cell(const std::optional<Real>& x) { return x ? Cell(to_double(*x)) : Cell(); }
inline Cell cell(int x) { return static_cast<std::int64_t>(x); }
inline Cell cell(std::size_t x) { return static_cast<std::uint64_t>(x); }
inline Cell cell(std::string s) { return s; }
inline Cell cell(std::string_view s) { return std::string(s); }
inline Cell cell(const char* s) { return std::string(s); }
inline Cell cell(bool b) { return b; }

inline std::string csv_field(const Cell& c) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(std::uint64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(const std::string& s) const {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
      }
      return q + "\"";
    }
  };
  return std::visit(Visitor{}, c);
}

inline nlohmann::ordered_json json_value(const Cell& c) {
  struct Visitor {
    nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
    nlohmann::ordered_json operator()(bool b) const { return b; }
    nlohmann::ordered_json operator()(std::int64_t v) const { return v; }
    nlohmann::ordered_json operator()(std::uint64_t v) const { return v; }
    nlohmann::ordered_json operator()(double v) const { return v; }
    nlohmann::ordered_json operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, c);
}

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << t.columns[k];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << csv_field(row[k]);
    os << '\n';
  }
}

inline nlohmann::ordered_json to_json(const Table& t) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < row.size(); ++k) obj[t.columns[k]] = json_value(row[k]);
    rows.push_back(std::move(obj));
  }
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  doc["meta"] = t.meta;
  doc["rows"] = std::move(rows);
  return doc;
}

inline void write_json(std::ostream& os, const Table& t) { os << to_json(t).dump(2) << '\n'; }

// ---------------------------------------------------------------------------
// Fixed schemas.

inline Table estimate_table(const LyapunovEstimate& e) {
  Table t;
  t.columns = {"mode", "n", "estimate", "excluded_count", "sample_count", "standard_error"};
  t.rows.push_back({cell(mode_name(e.mode)), cell(e.n), cell(e.value), cell(e.excluded_count),
                    cell(e.sample_count), cell(e.standard_error)});
  return t;
}

inline Table rates_table(const RateReport& report) {
  Table t;
  t.columns = {"n", "mode", "estimate", "error", "error_ndinv", "error_dhalf"};
  for (const auto& r : report.rows) {
    t.rows.push_back({cell(r.n), cell(mode_name(r.mode)), cell(r.estimate), cell(r.error), cell(r.error_ndinv),
                      cell(r.error_dhalf)});
  }
  t.meta["reference"] = report.reference ? nlohmann::ordered_json(to_double(*report.reference)) : nullptr;
  t.meta["reference_mode"] = std::string(mode_name(report.reference_mode));
  t.meta["full_bounded"] = report.full_bounded ? nlohmann::ordered_json(*report.full_bounded) : nullptr;
  t.meta["exact_bounded"] = report.exact_bounded ? nlohmann::ordered_json(*report.exact_bounded) : nullptr;
  return t;
}

inline Table padic_table(const std::vector<PAdicRow>& rows) {
  Table t;
  t.columns = {"n", "p", "valuation_numer", "denom", "estimate"};
  for (const auto& r : rows) {
    t.rows.push_back({cell(r.n), Cell(static_cast<std::uint64_t>(r.p)), Cell(static_cast<std::int64_t>(r.valuation_numer)),
                      Cell(static_cast<std::int64_t>(r.denom)), cell(r.estimate)});
  }
  return t;
}

inline Table samples_table(const std::vector<EquilibriumSample>& samples) {
  Table t;
  t.columns = {"index", "re", "im", "chart"};
  for (const auto& s : samples) {
    if (s.point.is_infinity()) {
      t.rows.push_back({cell(s.index), Cell(0.0), Cell(0.0), cell("infinity")});
    } else {
      t.rows.push_back({cell(s.index), cell(s.point.value().re), cell(s.point.value().im), cell("affine")});
    }
  }
  return t;
}

}  // namespace lyapunov::io
