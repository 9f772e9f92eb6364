#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pchain/constants.hpp"

namespace pchain {

/// Fixed 12-significant-digit rendering; identical input gives identical text.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

using Cell = std::variant<double, long long, bool, std::string>;

inline std::string format_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) return format_number(v);
        else if constexpr (std::is_same_v<T, long long>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "1" : "0";
        else return v;
      },
      c);
}

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

/// Output document: ordered metadata plus one or more tables.
struct Report {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<Table> tables;

  void set(std::string key, std::string value) {
    for (auto& [k, v] : meta)
      if (k == key) {
        v = std::move(value);
        return;
      }
    meta.emplace_back(std::move(key), std::move(value));
  }
  Table& table(std::string name, std::vector<std::string> columns) {
    tables.push_back({std::move(name), std::move(columns), {}});
    return tables.back();
  }
};

inline constexpr std::string_view kUnitConventions =
    "angular frequencies and couplings in rad/s; columns suffixed _Hz are cyclic (omega/2pi); "
    "times in s; lengths in m unless suffixed _um";

/// Metadata every output carries.
inline void stamp(Report& r, std::string_view command, std::string_view anomaly_mode, std::string_view orientation) {
  r.set("command", std::string(command));
  r.set("anomaly_mode", std::string(anomaly_mode));
  r.set("orientation", std::string(orientation));
  r.set("constants_version", std::string(kConstantsVersion));
  r.set("units", std::string(kUnitConventions));
  r.set("float_format", "%.12g");
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline void write_csv(std::ostream& os, const Report& r) {
  for (const auto& [k, v] : r.meta) os << "# " << k << ": " << v << '\n';
  bool first = true;
  for (const auto& t : r.tables) {
    if (!first) os << '\n';
    first = false;
    os << "# table: " << t.name << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << csv_field(t.columns[i]);
    os << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_field(format_cell(row[i]));
      os << '\n';
    }
  }
}

inline nlohmann::ordered_json to_json(const Report& r) {
  nlohmann::ordered_json j;
  j["meta"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.meta) j["meta"][k] = v;
  j["tables"] = nlohmann::ordered_json::object();
  for (const auto& t : r.tables) {
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
      nlohmann::ordered_json obj;
      for (std::size_t i = 0; i < row.size() && i < t.columns.size(); ++i) {
        std::visit(
            [&](const auto& v) {
              using T = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<T, double>) {
                // Round through the CSV text so both formats carry the same digits.
                if (std::isfinite(v)) obj[t.columns[i]] = std::strtod(format_number(v).c_str(), nullptr);
                else obj[t.columns[i]] = format_number(v);
              } else {
                obj[t.columns[i]] = v;
              }
            },
            row[i]);
      }
      rows.push_back(std::move(obj));
    }
    j["tables"][t.name] = std::move(rows);
  }
  return j;
}

inline void write_json(std::ostream& os, const Report& r) { os << to_json(r).dump(2) << '\n'; }

}  // namespace pchain
