#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "flks/core.hpp"
#include "flks/describe.hpp"
#include "flks/errors.hpp"
#include "flks/pde_solver.hpp"

namespace flks {

/// A CSV file with a comment header holding the result kind, the JSON
/// parameter record and the echo of the config that produced it.
struct CsvTable {
  std::string kind;
  json params = json::object();
  std::string config;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::vector<double> column(const std::string& name) const;
};

namespace csv_detail {

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string o = "\"";
  for (char c : s) o += c == '"' ? std::string("\"\"") : std::string(1, c);
  return o + "\"";
}

inline std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline void flatten(const json& j, const std::string& prefix, CsvTable& t) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), t);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), t);
  } else if (j.is_number()) {
    t.rows.push_back({prefix, num(j.get<double>())});
  } else if (j.is_string()) {
    t.rows.push_back({prefix, j.get<std::string>()});
  } else {
    t.rows.push_back({prefix, j.dump()});
  }
}

} // namespace csv_detail

inline std::vector<double> CsvTable::column(const std::string& name) const {
  std::size_t k = 0;
  while (k < columns.size() && columns[k] != name) ++k;
  if (k == columns.size()) throw DomainError("no column '" + name + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    double x = 0.0;
    const std::string& s = r.at(k);
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw DomainError("cell '" + s + "' is not a number");
    out.push_back(x);
  }
  return out;
}

/// Long format t, x, u, v over all frames.
inline CsvTable trajectory_table(const std::vector<FieldPair>& frames, const Grid1D& grid) {
  CsvTable t;
  t.kind = "trajectory";
  t.columns = {"t", "x", "u", "v"};
  for (const auto& f : frames) {
    if (!f.matches(grid)) throw GridMismatch("frame does not match the export grid");
    for (std::size_t i = 0; i < grid.nodes(); ++i)
      t.rows.push_back({csv_detail::num(f.t), csv_detail::num(grid.x(i)), csv_detail::num(f.u[i]), csv_detail::num(f.v[i])});
  }
  return t;
}

inline CsvTable profile_table(const std::vector<std::string>& names, const std::vector<std::vector<double>>& cols) {
  if (names.size() != cols.size() || cols.empty()) throw DomainError("profile needs one name per column");
  for (const auto& c : cols)
    if (c.size() != cols[0].size()) throw GridMismatch("profile columns differ in length");
  CsvTable t;
  t.kind = "profile";
  t.columns = names;
  for (std::size_t i = 0; i < cols[0].size(); ++i) {
    std::vector<std::string> r;
    for (const auto& c : cols) r.push_back(csv_detail::num(c[i]));
    t.rows.push_back(std::move(r));
  }
  return t;
}

/// key, value rows from a JSON report; nested keys are joined with '.'.
inline CsvTable report_table(const json& report) {
  CsvTable t;
  t.kind = "report";
  t.columns = {"key", "value"};
  csv_detail::flatten(report, "", t);
  return t;
}

inline std::string to_csv_text(const CsvTable& t) {
  std::ostringstream os;
  os << "# kind: " << t.kind << "\n";
  os << "# params: " << t.params.dump() << "\n";
  os << "# config:\n";
  std::istringstream cfg(t.config);
  for (std::string line; std::getline(cfg, line);) os << "#   " << line << "\n";
  for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << csv_detail::escape(t.columns[k]);
  os << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << csv_detail::escape(r[k]);
    os << "\n";
  }
  return os.str();
}

inline void export_csv(const CsvTable& t, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(path, "cannot open for writing");
  f << to_csv_text(t);
  if (!f) throw IoError(path, "write failed");
}

inline CsvTable parse_csv_text(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool in_config = false, have_columns = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_columns && line.rfind("#", 0) == 0) {
      if (line.rfind("# kind: ", 0) == 0) {
        t.kind = line.substr(8);
        in_config = false;
      } else if (line.rfind("# params: ", 0) == 0) {
        t.params = json::parse(line.substr(10));
        in_config = false;
      } else if (line == "# config:") {
        in_config = true;
      } else if (in_config && line.rfind("#   ", 0) == 0) {
        t.config += line.substr(4) + "\n";
      } else if (in_config && line == "#") {
        t.config += "\n";
      }
      continue;
    }
    if (!have_columns) {
      t.columns = csv_detail::split_row(line);
      have_columns = true;
      continue;
    }
    if (line.empty()) continue;
    t.rows.push_back(csv_detail::split_row(line));
  }
  return t;
}

inline CsvTable import_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv_text(ss.str());
}

/// Body of a CSV file: everything after the comment header.
inline std::string csv_body(const std::string& text) {
  std::size_t pos = 0;
  while (pos < text.size() && text[pos] == '#') {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) return {};
    pos = nl + 1;
  }
  return text.substr(pos);
}

} // namespace flks
