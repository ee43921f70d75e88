#pragma once

#include <charconv>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flks/core.hpp"
#include "flks/errors.hpp"
#include "flks/pde_solver.hpp"

namespace flks {

/// Flat run description parsed from a sectioned key = value file.
struct RunConfig {
  std::string command = "simulate";
  std::string out = "out";
  std::uint64_t seed = 1;

  // [model]
  double D = 0.8, tau = 0.1, alpha = 1.1;
  // [limiter]
  std::string limiter = "tanh";
  double vmax = 1.1, s0 = 1.4, a = 1.0;
  // [decay]
  std::string decay = "constant";
  double kappa0 = 0.5, mu = 1.0, lambda = 0.0;
  std::vector<std::pair<double, double>> samples{{0.0, 0.5}, {100.0, 0.5}};
  bool allow_negative = false;
  // [grid]
  double x_lo = -10.0, x_hi = 10.0;
  int cells = 200;
  std::string bc = "neumann";
  // [solver]
  double t_start = 0.0, t_end = 5.0, cfl = 0.4, frame_dt = 0.1;
  std::uint64_t output_stride = 100, max_steps = 50'000'000;
  // [initial]
  std::string initial = "gaussian"; // uniform | gaussian | cosine | random
  double u0 = 1.0, v0 = 2.0, amplitude = 2.0, width = 1.0;
  // [exact]
  std::string family = "homogeneous"; // homogeneous | travelling_tanh | cellfree_front
  double C = 1.0, V0 = 0.0, t0 = 0.0, exact_t_end = 5.0;
  int frames = 51;
  double A = 1.0, B = 0.3, y_min = -10.0, y_max = 10.0, U_ref = 1.0;
  int wave_n = 1000;
  // [reduce]
  std::string reduce = "self_similar"; // homogeneous | steady_state | travelling_wave | self_similar | cellfree_wave
  double r_lo = 0.0, r_hi = 12.0, U0 = 1.0, C1 = 0.0;
  int r_n = 1200;
  std::vector<double> r_initial{};
  // [verify]
  std::string check = "residual"; // residual | invariance | convergence
  std::string generator = "X1";
  double eps = 1.0;
  std::vector<double> conv_cells{16, 32, 64, 128};
  // [lie]
  std::string lie_case = "III";
  // [sweep]
  std::string sweep_key = "model.D";
  std::vector<std::string> sweep_values{"0.4", "0.8", "1.2"};
  std::string sweep_command = "simulate";
  int jobs = 4;

  ModelParams model() const;
  Grid1D grid() const { return Grid1D(x_lo, x_hi, cells); }
  BoundaryCondition boundary() const;
  SolverConfig solver() const;
  void validate() const;
};

namespace config_detail {

struct BadValue {
  std::string what;
};

inline std::string fmt(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return std::string(s.substr(a, b - a));
}

inline double to_double(std::string_view s) {
  const std::string t = trim(s);
  double x = 0.0;
  auto r = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) throw BadValue{"expected a number, got '" + t + "'"};
  return x;
}

inline std::uint64_t to_uint(std::string_view s) {
  const std::string t = trim(s);
  std::uint64_t x = 0;
  auto r = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size())
    throw BadValue{"expected a nonnegative integer, got '" + t + "'"};
  return x;
}

inline int to_int(std::string_view s) {
  const std::uint64_t x = to_uint(s);
  if (x > 1'000'000'000ULL) throw BadValue{"integer out of range"};
  return static_cast<int>(x);
}

inline bool to_bool(std::string_view s) {
  const std::string t = trim(s);
  if (t == "true") return true;
  if (t == "false") return false;
  throw BadValue{"expected true or false, got '" + t + "'"};
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i)
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  return out;
}

inline std::vector<double> to_list(std::string_view s) {
  std::vector<double> out;
  for (const auto& p : split(s, ',')) out.push_back(to_double(p));
  return out;
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s;
}

inline std::string one_of(std::string_view s, std::initializer_list<std::string_view> allowed) {
  const std::string t = trim(s);
  for (auto a : allowed)
    if (t == a) return t;
  std::string list;
  for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
  throw BadValue{"'" + t + "' is not one of " + list};
}

struct Binding {
  std::string section, key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define FLKS_NUM(sec, name, member)                                                                            \
  Binding { sec, name, [](RunConfig& c, std::string_view v) { c.member = to_double(v); },                     \
            [](const RunConfig& c) { return fmt(c.member); } }
#define FLKS_INT(sec, name, member)                                                                            \
  Binding { sec, name, [](RunConfig& c, std::string_view v) { c.member = to_int(v); },                        \
            [](const RunConfig& c) { return std::to_string(c.member); } }
#define FLKS_UINT(sec, name, member)                                                                           \
  Binding { sec, name, [](RunConfig& c, std::string_view v) { c.member = to_uint(v); },                       \
            [](const RunConfig& c) { return std::to_string(c.member); } }
#define FLKS_STR(sec, name, member, ...)                                                                       \
  Binding { sec, name, [](RunConfig& c, std::string_view v) { c.member = one_of(v, {__VA_ARGS__}); },         \
            [](const RunConfig& c) { return c.member; } }

inline const std::vector<Binding>& bindings() {
  static const std::vector<Binding> b{
      FLKS_STR("", "command", command, "simulate", "exact", "reduce", "verify", "lie", "sweep"),
      Binding{"", "out",
              [](RunConfig& c, std::string_view v) {
                c.out = trim(v);
                if (c.out.empty()) throw BadValue{"output directory must be nonempty"};
              },
              [](const RunConfig& c) { return c.out; }},
      FLKS_UINT("", "seed", seed),
      FLKS_NUM("model", "D", D),
      FLKS_NUM("model", "tau", tau),
      FLKS_NUM("model", "alpha", alpha),
      FLKS_STR("limiter", "kind", limiter, "algebraic_sqrt", "tanh", "weber_fechner_log", "tanh_log"),
      FLKS_NUM("limiter", "vmax", vmax),
      FLKS_NUM("limiter", "s0", s0),
      FLKS_NUM("limiter", "a", a),
      FLKS_STR("decay", "kind", decay, "constant", "power_law", "exponential", "tabulated"),
      FLKS_NUM("decay", "kappa0", kappa0),
      FLKS_NUM("decay", "mu", mu),
      FLKS_NUM("decay", "lambda", lambda),
      Binding{"decay", "samples",
              [](RunConfig& c, std::string_view v) {
                c.samples.clear();
                for (const auto& p : split(v, ',')) {
                  const auto tk = split(p, ':');
                  if (tk.size() != 2) throw BadValue{"samples are t:kappa pairs separated by commas"};
                  c.samples.emplace_back(to_double(tk[0]), to_double(tk[1]));
                }
              },
              [](const RunConfig& c) {
                std::string s;
                for (std::size_t i = 0; i < c.samples.size(); ++i)
                  s += (i ? ", " : "") + fmt(c.samples[i].first) + ":" + fmt(c.samples[i].second);
                return s;
              }},
      Binding{"decay", "allow_negative", [](RunConfig& c, std::string_view v) { c.allow_negative = to_bool(v); },
              [](const RunConfig& c) { return std::string(c.allow_negative ? "true" : "false"); }},
      FLKS_NUM("grid", "x_lo", x_lo),
      FLKS_NUM("grid", "x_hi", x_hi),
      FLKS_INT("grid", "cells", cells),
      FLKS_STR("grid", "bc", bc, "neumann", "periodic"),
      FLKS_NUM("solver", "t0", t_start),
      FLKS_NUM("solver", "t_end", t_end),
      FLKS_NUM("solver", "cfl", cfl),
      FLKS_NUM("solver", "frame_dt", frame_dt),
      FLKS_UINT("solver", "output_stride", output_stride),
      FLKS_UINT("solver", "max_steps", max_steps),
      FLKS_STR("initial", "kind", initial, "uniform", "gaussian", "cosine", "random"),
      FLKS_NUM("initial", "u0", u0),
      FLKS_NUM("initial", "v0", v0),
      FLKS_NUM("initial", "amplitude", amplitude),
      FLKS_NUM("initial", "width", width),
      FLKS_STR("exact", "family", family, "homogeneous", "travelling_tanh", "cellfree_front"),
      FLKS_NUM("exact", "C", C),
      FLKS_NUM("exact", "V0", V0),
      FLKS_NUM("exact", "t0", t0),
      FLKS_NUM("exact", "t_end", exact_t_end),
      FLKS_INT("exact", "frames", frames),
      FLKS_NUM("exact", "A", A),
      FLKS_NUM("exact", "B", B),
      FLKS_NUM("exact", "y_min", y_min),
      FLKS_NUM("exact", "y_max", y_max),
      FLKS_NUM("exact", "U_ref", U_ref),
      FLKS_INT("exact", "n", wave_n),
      FLKS_STR("reduce", "kind", reduce, "homogeneous", "steady_state", "travelling_wave", "self_similar",
               "cellfree_wave"),
      FLKS_NUM("reduce", "lo", r_lo),
      FLKS_NUM("reduce", "hi", r_hi),
      FLKS_INT("reduce", "n", r_n),
      FLKS_NUM("reduce", "U0", U0),
      FLKS_NUM("reduce", "C1", C1),
      Binding{"reduce", "initial", [](RunConfig& c, std::string_view v) { c.r_initial = to_list(v); },
              [](const RunConfig& c) { return join(c.r_initial); }},
      FLKS_STR("verify", "check", check, "residual", "invariance", "convergence"),
      FLKS_STR("verify", "generator", generator, "X1", "X2", "X3", "X4"),
      FLKS_NUM("verify", "eps", eps),
      Binding{"verify", "cells", [](RunConfig& c, std::string_view v) { c.conv_cells = to_list(v); },
              [](const RunConfig& c) { return join(c.conv_cells); }},
      FLKS_STR("lie", "case", lie_case, "I", "II", "III", "IV"),
      Binding{"sweep", "key", [](RunConfig& c, std::string_view v) { c.sweep_key = trim(v); },
              [](const RunConfig& c) { return c.sweep_key; }},
      Binding{"sweep", "values", [](RunConfig& c, std::string_view v) { c.sweep_values = split(v, ','); },
              [](const RunConfig& c) {
                std::string s;
                for (std::size_t i = 0; i < c.sweep_values.size(); ++i) s += (i ? ", " : "") + c.sweep_values[i];
                return s;
              }},
      FLKS_STR("sweep", "command", sweep_command, "simulate", "exact", "reduce", "verify", "lie"),
      FLKS_INT("sweep", "jobs", jobs),
  };
  return b;
}

#undef FLKS_NUM
#undef FLKS_INT
#undef FLKS_UINT
#undef FLKS_STR

inline const Binding* find(const std::string& section, const std::string& key) {
  for (const auto& b : bindings())
    if (b.section == section && b.key == key) return &b;
  return nullptr;
}

} // namespace config_detail

inline ModelParams RunConfig::model() const {
  ModelParams p;
  p.D = D;
  p.tau = tau;
  p.limiter.kind = limiter_kind_from_name(limiter);
  p.limiter.vmax = vmax;
  p.limiter.s0 = s0;
  p.limiter.a = a;
  if (decay == "constant") p.decay = ConstantDecay{kappa0};
  else if (decay == "power_law") p.decay = PowerLawDecay{mu};
  else if (decay == "exponential") p.decay = ExponentialDecay{kappa0, lambda};
  else p.decay = TabulatedDecay{samples};
  return p;
}

inline BoundaryCondition RunConfig::boundary() const {
  return bc == "periodic" ? BoundaryCondition::Periodic : BoundaryCondition::Neumann;
}

inline SolverConfig RunConfig::solver() const {
  SolverConfig c;
  c.grid = grid();
  c.bc = boundary();
  c.cfl_safety = cfl;
  c.t_end = t_end;
  c.frame_dt = frame_dt;
  c.output_stride = output_stride;
  c.max_steps = max_steps;
  return c;
}

/// Field-level checks beyond syntax. Negative decay rates are admissible in
/// the model but need decay.allow_negative = true.
inline void RunConfig::validate() const {
  const ModelParams p = model();
  p.validate();
  if (!allow_negative) {
    if ((decay == "constant" || decay == "exponential") && kappa0 < 0.0)
      throw ValidationError("decay.kappa0", "negative decay rate; set decay.allow_negative = true to run it");
    if (decay == "power_law" && mu < 0.0)
      throw ValidationError("decay.mu", "negative decay rate; set decay.allow_negative = true to run it");
    if (decay == "tabulated")
      for (const auto& [t, k] : samples)
        if (k < 0.0) throw ValidationError("decay.samples", "negative decay rate; set decay.allow_negative = true");
  }
  solver().validate();
  if (!(t_end > t_start)) throw ValidationError("solver.t_end", "must exceed solver.t0");
  const bool uses_solver = command == "simulate" || command == "verify" ||
                           (command == "sweep" && (sweep_command == "simulate" || sweep_command == "verify"));
  if (uses_solver && decay == "power_law" && !(t_start > 0.0)) throw ValidationError("solver.t0", "power-law decay needs t0 > 0");
  if (frames < 2) throw ValidationError("exact.frames", "need at least two frames");
  if (!(exact_t_end > t0)) throw ValidationError("exact.t_end", "must exceed exact.t0");
  if (!(y_max > y_min)) throw ValidationError("exact.y_max", "must exceed exact.y_min");
  if (wave_n < 8) throw ValidationError("exact.n", "need at least 8 cells");
  if (conv_cells.size() < 3) throw ValidationError("verify.cells", "need at least three grids");
  for (double n : conv_cells)
    if (!(n >= 8.0) || n != static_cast<double>(static_cast<int>(n)))
      throw ValidationError("verify.cells", "grid sizes are integers >= 8");
  if (jobs < 1) throw ValidationError("sweep.jobs", "must be >= 1");
  if (sweep_values.empty()) throw ValidationError("sweep.values", "need at least one value");
}

/// Parses text, applies `section.key=value` overrides (reported as line 0),
/// and validates. Unknown or repeated keys are errors.
inline RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {}) {
  using namespace config_detail;
  RunConfig c;
  std::map<std::pair<std::string, std::string>, int> seen;
  auto apply = [&](const std::string& section, const std::string& key, std::string_view value, int line, int kcol,
                   int vcol) {
    const Binding* b = find(section, key);
    if (!b) throw ParseError("unknown key '" + (section.empty() ? key : section + "." + key) + "'", line, kcol);
    try {
      b->set(c, value);
    } catch (const BadValue& e) {
      throw ParseError(e.what + " for '" + (section.empty() ? key : section + "." + key) + "'", line, vcol);
    }
  };

  std::string section;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#' || line[first] == ';') continue;
    if (line[first] == '[') {
      const std::size_t close = line.find(']', first);
      if (close == std::string::npos) throw ParseError("unterminated section header", line_no, static_cast<int>(first) + 1);
      if (!trim(std::string_view(line).substr(close + 1)).empty())
        throw ParseError("text after section header", line_no, static_cast<int>(close) + 2);
      section = trim(std::string_view(line).substr(first + 1, close - first - 1));
      if (section.empty()) throw ParseError("empty section name", line_no, static_cast<int>(first) + 1);
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no, static_cast<int>(first) + 1);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ParseError("missing key", line_no, static_cast<int>(first) + 1);
    if (!seen.emplace(std::make_pair(section, key), line_no).second)
      throw ParseError("duplicate key '" + key + "'", line_no, static_cast<int>(first) + 1);
    std::size_t vstart = line.find_first_not_of(" \t", eq + 1);
    if (vstart == std::string::npos) vstart = line.size();
    apply(section, key, std::string_view(line).substr(eq + 1), line_no, static_cast<int>(first) + 1,
          static_cast<int>(vstart) + 1);
  }

  for (const auto& o : overrides) {
    const std::size_t eq = o.find('=');
    if (eq == std::string::npos) throw ParseError("override '" + o + "' is not key=value", 0, 1);
    const std::string full = trim(std::string_view(o).substr(0, eq));
    const std::size_t dot = full.find('.');
    const std::string sec = dot == std::string::npos ? "" : full.substr(0, dot);
    const std::string key = dot == std::string::npos ? full : full.substr(dot + 1);
    apply(sec, key, std::string_view(o).substr(eq + 1), 0, 1, static_cast<int>(eq) + 2);
  }
  c.validate();
  return c;
}

/// Canonical text: every key in schema order, numbers in shortest
/// round-trip form. parse_config(echo(c)) reproduces c exactly.
inline std::string echo(const RunConfig& c) {
  std::string out, section = "\x01";
  for (const auto& b : config_detail::bindings()) {
    if (b.section != section) {
      if (!b.section.empty()) out += (out.empty() ? "" : "\n") + ("[" + b.section + "]\n");
      section = b.section;
    }
    out += b.key + " = " + b.get(c) + "\n";
  }
  return out;
}

} // namespace flks
