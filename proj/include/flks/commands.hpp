#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <mutex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "flks/config.hpp"
#include "flks/csv_io.hpp"
#include "flks/describe.hpp"
#include "flks/exact_solutions.hpp"
#include "flks/lie_toolkit.hpp"
#include "flks/pde_solver.hpp"
#include "flks/plot_script.hpp"
#include "flks/reduced_systems.hpp"
#include "flks/verify.hpp"

namespace flks {

enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitIo = 4 };

// ------------------------------------------------------------ logging

inline int verbosity() {
  const char* v = std::getenv("FLKS_VERBOSE");
  return v ? std::atoi(v) : 0;
}

inline void log(int level, const std::string& msg) {
  static std::mutex m;
  if (level > verbosity()) return;
  std::lock_guard<std::mutex> lock(m);
  std::cerr << "[flks] " << msg << "\n";
}

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<std::string> files;
  json report = json::object();
  std::string message;
};

namespace cmd_detail {

struct Output {
  const RunConfig& cfg;
  std::filesystem::path dir;
  CommandResult& res;

  std::string path(const std::string& name) const { return (dir / name).string(); }

  void csv(CsvTable t, const std::string& name, json params) {
    t.params = std::move(params);
    t.config = echo(cfg);
    export_csv(t, path(name));
    res.files.push_back(path(name));
    log(1, "wrote " + path(name));
  }
  void plot(PlotKind k, const std::string& csv_name, const std::string& name) {
    emit_plot_script(k, path(csv_name), path(name));
    res.files.push_back(path(name));
  }
  void report(const json& r, json params) {
    res.report = r;
    std::ofstream f(path("report.json"), std::ios::binary);
    if (!f) throw IoError(path("report.json"), "cannot open for writing");
    f << r.dump(2) << "\n";
    res.files.push_back(path("report.json"));
    csv(report_table(r), "report.csv", std::move(params));
  }
};

inline FieldPair initial_state(const RunConfig& c, const Grid1D& g) {
  FieldPair s(g, c.t_start);
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> noise(-0.5, 0.5);
  const double L = g.x_hi - g.x_lo;
  for (std::size_t i = 0; i < g.nodes(); ++i) {
    const double x = g.x(i);
    s.v[i] = c.v0;
    if (c.initial == "uniform") s.u[i] = c.u0;
    else if (c.initial == "gaussian") s.u[i] = c.u0 + c.amplitude * std::exp(-x * x / (c.width * c.width));
    else if (c.initial == "cosine") s.u[i] = c.u0 + c.amplitude * std::cos(2 * std::numbers::pi * (x - g.x_lo) / L);
    else s.u[i] = c.u0 * (1.0 + c.amplitude * noise(rng));
  }
  return s;
}

inline json params_record(const RunConfig& c) {
  return {{"command", c.command}, {"model", describe(c.model())}, {"grid", describe(c.grid())},
          {"bc", std::string(to_string(c.boundary()))}, {"seed", c.seed}};
}

inline Trajectory simulate_run(const RunConfig& c) {
  const ModelParams p = c.model();
  const SolverConfig sc = c.solver();
  return run(initial_state(c, sc.grid), p, sc);
}

inline json trajectory_summary(const Trajectory& tr) {
  return {{"steps", tr.steps},
          {"t_final", tr.t_final},
          {"frames", tr.frames.size()},
          {"mass_initial", tr.mass.front()},
          {"mass_drift", std::abs(tr.mass.back() - tr.mass.front())},
          {"min_u", *std::min_element(tr.min_u.begin(), tr.min_u.end())},
          {"max_flux", *std::max_element(tr.max_flux.begin(), tr.max_flux.end())}};
}

inline std::vector<double> sample_times(double a, double b, int n) {
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) t[static_cast<std::size_t>(k)] = k + 1 == n ? b : a + (b - a) * k / (n - 1);
  return t;
}

inline std::vector<FieldPair> sample_solution(const ExactSolution& s, const Grid1D& g, const std::vector<double>& ts) {
  std::vector<FieldPair> frames;
  for (double t : ts) frames.push_back(sample(s, g, t));
  return frames;
}

// ------------------------------------------------------------ commands

inline void simulate(Output& out) {
  const RunConfig& c = out.cfg;
  const Trajectory tr = simulate_run(c);
  json params = params_record(c);
  params["solver"] = {{"t0", c.t_start}, {"t_end", c.t_end}, {"cfl", c.cfl}, {"frame_dt", c.frame_dt}};
  out.csv(trajectory_table(tr.frames, c.grid()), "trajectory.csv", params);
  out.plot(PlotKind::Trajectory, "trajectory.csv", "plot_trajectory.py");
  const json summary = trajectory_summary(tr);
  out.report({{"status", "ok"}, {"summary", summary}}, params);
}

inline void exact(Output& out) {
  const RunConfig& c = out.cfg;
  const ModelParams p = c.model();
  const Grid1D g = c.grid();
  json params = params_record(c);
  json rep{{"status", "ok"}, {"family", c.family}};
  ExactSolution sol;
  if (c.family == "homogeneous") {
    sol = case1_homogeneous(p, p.decay, c.C, c.V0, c.t0);
  } else if (c.family == "travelling_tanh") {
    TravellingWaveOptions o;
    o.params = p;
    o.alpha = c.alpha;
    o.kappa0 = constant_decay_rate(p.decay);
    o.U_ref = c.U_ref;
    o.y_min = c.y_min;
    o.y_max = c.y_max;
    o.n = static_cast<std::size_t>(c.wave_n);
    TravellingWave tw;
    sol = case2_travelling_tanh(o, &tw);
    out.csv(profile_table({"y", "U", "V", "s"}, {tw.y, tw.U, tw.V, tw.s}), "profile.csv", params);
    out.plot(PlotKind::Profile, "profile.csv", "plot_profile.py");
    const double lo = std::max(-5.0, c.y_min), hi = std::min(5.0, c.y_max);
    const WaveDefect d = travelling_wave_defect(tw, p, c.alpha, o.kappa0, lo, hi);
    rep["wave"] = {{"iterations", tw.iterations}, {"C1", tw.C1}, {"r_plus", tw.roots.plus},
                   {"r_minus", tw.roots.minus}, {"U_equation_defect", d.U_equation},
                   {"V_equation_defect", d.V_equation}, {"defect_window", {lo, hi}}};
    // outside the profile window the field is left undefined
    auto u = sol.u, v = sol.v;
    const double a = c.alpha, y0 = tw.y.front(), y1 = tw.y.back();
    auto inside = [a, y0, y1](double x, double t) { return t - a * x >= y0 && t - a * x <= y1; };
    sol.u = [u, inside](double x, double t) { return inside(x, t) ? u(x, t) : NAN; };
    sol.v = [v, inside](double x, double t) { return inside(x, t) ? v(x, t) : NAN; };
  } else {
    const auto* e = std::get_if<ExponentialDecay>(&p.decay);
    if (!e) throw ValidationError("decay.kind", "cellfree_front needs the exponential decay law");
    sol = case4_cellfree_front(c.alpha, p.tau, e->kappa0, e->lambda, c.A, c.B);
  }
  params["exact"] = sol.params;
  rep["subcase"] = sol.subcase;
  rep["assumptions"] = sol.assumptions;
  const auto ts = sample_times(c.t0, c.exact_t_end, c.frames);
  out.csv(trajectory_table(sample_solution(sol, g, ts), g), "exact.csv", params);
  out.plot(PlotKind::Trajectory, "exact.csv", "plot_exact.py");
  if (c.family != "travelling_tanh") {
    // keep the time stencil inside the sampled interval
    const double k = 1e-3 * (c.exact_t_end - c.t0);
    std::vector<double> inner;
    for (double t : ts)
      if (t - 2 * k >= c.t0 && t + 2 * k <= c.exact_t_end) inner.push_back(t);
    const Grid1D rg(g.x_lo + 2 * g.dx(), g.x_hi - 2 * g.dx(), std::max(8, g.n - 4));
    rep["residual"] = describe(pde_residual(sol, p, rg, inner, k));
  }
  out.report(rep, params);
}

inline json defects_json(const SelfSimilarDefects& d) {
  return {{"U_equation", d.U_equation}, {"V_equation", d.V_equation}, {"S_form", d.S_form},
          {"pde_consistent", d.pde_consistent}, {"S_vs_dV", d.S_vs_dV}};
}

inline void reduce(Output& out) {
  const RunConfig& c = out.cfg;
  ReducedProblem pr;
  pr.params = c.model();
  pr.alpha = c.alpha;
  pr.lo = c.r_lo;
  pr.hi = c.r_hi;
  pr.n = static_cast<std::size_t>(c.r_n);
  pr.initial = c.r_initial;
  pr.U0 = c.U0;
  pr.C1 = c.C1;
  json params = params_record(c);
  params["reduce"] = {{"kind", c.reduce}, {"lo", pr.lo}, {"hi", pr.hi}, {"n", pr.n}};
  json rep{{"status", "ok"}, {"kind", c.reduce}};
  if (c.reduce == "homogeneous") {
    pr.kind = ReducedKind::HomogeneousODE;
    if (pr.initial.empty()) pr.initial = {c.C, c.V0};
    const auto h = integrate_homogeneous(pr);
    out.csv(profile_table({"t", "U", "V"}, {h.t, h.U, h.V}), "profile.csv", params);
  } else if (c.reduce == "steady_state") {
    pr.kind = ReducedKind::SteadyStateBVP;
    const auto s = solve_steady_state(pr);
    rep["defect"] = s.defect;
    rep["iterations"] = s.iterations;
    out.csv(profile_table({"x", "U", "V"}, {s.x, s.U, s.V}), "profile.csv", params);
  } else if (c.reduce == "travelling_wave") {
    pr.kind = ReducedKind::TravellingWaveODE;
    const auto w = integrate_travelling_wave(pr);
    out.csv(profile_table({"y", "U", "P", "V", "s"}, {w.y, w.U, w.P, w.V, w.s}), "profile.csv", params);
  } else if (c.reduce == "cellfree_wave") {
    pr.kind = ReducedKind::CellFreeWaveODE;
    if (const auto* e = std::get_if<ExponentialDecay>(&pr.params.decay)) pr.lambda = e->lambda;
    const auto w = integrate_cellfree_wave(pr);
    out.csv(profile_table({"y", "V", "s"}, {w.y, w.V, w.s}), "profile.csv", params);
  } else {
    pr.kind = ReducedKind::SelfSimilarSystem;
    const auto* pl = std::get_if<PowerLawDecay>(&pr.params.decay);
    if (!pl) throw ValidationError("decay.kind", "self-similar reduction needs the power-law decay law");
    const auto s = solve_self_similar(pr, pl->mu);
    rep["iterations"] = s.iterations;
    rep["defects"] = defects_json(s.defects);
    rep["final_update"] = s.history.empty() ? 0.0 : s.history.back();
    out.csv(profile_table({"xi", "U", "V", "S"}, {s.xi, s.U, s.V, s.S}), "profile.csv", params);
  }
  out.plot(PlotKind::Profile, "profile.csv", "plot_profile.py");
  out.report(rep, params);
}

inline void verify(Output& out) {
  const RunConfig& c = out.cfg;
  const ModelParams p = c.model();
  json params = params_record(c);
  params["verify"] = {{"check", c.check}, {"generator", c.generator}, {"eps", c.eps}};
  json rep{{"status", "ok"}, {"check", c.check}};
  if (c.frame_dt <= 0.0 && c.check != "convergence")
    throw ValidationError("solver.frame_dt", "residual checks need frames at a uniform spacing");
  if (c.check == "residual") {
    const Trajectory tr = simulate_run(c);
    rep["residual"] = describe(pde_residual(tr.frames, p, c.grid(), c.boundary()));
  } else if (c.check == "invariance") {
    const Trajectory tr = simulate_run(c);
    const Generator g = c.generator == "X1"   ? Generator::X1
                        : c.generator == "X2" ? Generator::X2
                        : c.generator == "X3" ? Generator::X3
                                              : Generator::X4;
    const InvarianceReport r = group_invariance_check(g, tr.frames, p, c.grid(), c.boundary(), c.eps);
    rep["invariance"] = describe(r);
    if (!r.passed) {
      rep["status"] = "failed";
      out.res.exit_code = kExitNumerical;
      out.res.message = std::string(to_string(g)) + " invariance failed: residual ratio " + config_detail::fmt(r.ratio);
    }
  } else {
    // self-convergence: differences of successive refinements on the coarsest nodes
    std::vector<FieldPair> finals;
    std::vector<Grid1D> grids;
    for (double n : c.conv_cells) {
      RunConfig ci = c;
      ci.cells = static_cast<int>(n);
      SolverConfig sc = ci.solver();
      sc.frame_dt = 0.0;
      const Trajectory tr = run(initial_state(ci, sc.grid), p, sc);
      finals.push_back(tr.frames.back());
      grids.push_back(sc.grid);
    }
    std::vector<std::pair<double, double>> series;
    json diffs = json::array();
    for (std::size_t k = 0; k + 1 < finals.size(); ++k) {
      const double d = compare(restrict_to(finals[k + 1], grids[k + 1], grids[0]),
                               restrict_to(finals[k], grids[k], grids[0]))
                           .sup();
      series.emplace_back(grids[k].dx(), d);
      diffs.push_back({{"dx", grids[k].dx()}, {"difference", d}});
    }
    rep["series"] = diffs;
    if (series.size() >= 3) {
      const OrderFit f = convergence_order(series);
      rep["order"] = f.order;
      rep["r_squared"] = f.r_squared;
    } else {
      rep["order"] = std::log2(series[0].second / series[1].second);
    }
  }
  out.report(rep, params);
}

inline CaseTag case_from_name(const std::string& s) {
  if (s == "I") return CaseTag::I_Arbitrary;
  if (s == "II") return CaseTag::II_Constant;
  if (s == "III") return CaseTag::III_PowerLaw;
  return CaseTag::IV_Exponential;
}

inline void lie_report(Output& out) {
  const RunConfig& c = out.cfg;
  json params = params_record(c);
  params["lie"] = {{"case", c.lie_case}};
  const auto opt = lie::verify_optimal_system(case_from_name(c.lie_case));
  json rep{{"status", opt.passed() ? "ok" : "failed"}, {"optimal_system", lie::describe(opt)}};
  const std::vector<std::pair<std::string, lie::VectorField>> cat{
      {"X1", lie::x1()}, {"X2", lie::x2()}, {"X3", lie::x3()}, {"X4", lie::x4(lie::rat(1, 5))}};
  for (const auto& [na, a] : cat)
    for (const auto& [nb, b] : cat)
      if (na < nb) rep["commutators"]["[" + na + "," + nb + "]"] = lie::to_string(lie::commutator(a, b));
  rep["commutators_note"] = "X4 shown with lambda = 1/5";
  const ModelParams p = c.model();
  if (!std::holds_alternative<TabulatedDecay>(p.decay)) {
    const Classification cl = classify(p.decay);
    double c1 = 0, c2 = 0, lg = 0;
    if (cl.tag == CaseTag::II_Constant) c2 = 1;
    if (cl.tag == CaseTag::III_PowerLaw) c1 = 1;
    if (const auto* e = std::get_if<ExponentialDecay>(&p.decay)) {
      c2 = 1;
      lg = e->lambda;
    }
    const double t_lo = std::max(c.t_start, 1.0);
    rep["classifying_residual"] = {{"case", std::string(to_string(cl.tag))}, {"c1", c1}, {"c2", c2},
                                   {"lambda_g", lg},
                                   {"max_abs", lie::classifying_residual(p.decay, c1, c2, lg, t_lo, t_lo + 10).max_abs}};
  }
  if (!opt.passed()) {
    out.res.exit_code = kExitNumerical;
    out.res.message = "optimal-system checks failed for case " + c.lie_case;
  }
  out.report(rep, params);
}

} // namespace cmd_detail

CommandResult run_command(const RunConfig& cfg);

namespace cmd_detail {

inline void sweep(Output& out) {
  const RunConfig& c = out.cfg;
  const std::string base = echo(c);
  std::vector<CommandResult> results(c.sweep_values.size());
  std::vector<std::string> dirs(c.sweep_values.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) dirs[i] = out.path("run_" + std::to_string(i));
  auto one = [&](std::size_t i) {
    CommandResult r;
    try {
      const RunConfig ci = parse_config(base, {c.sweep_key + "=" + c.sweep_values[i], "command=" + c.sweep_command,
                                               "out=" + dirs[i]});
      r = run_command(ci);
    } catch (const ParseError& e) {
      r.exit_code = kExitConfig;
      r.message = e.what();
    } catch (const ValidationError& e) {
      r.exit_code = kExitConfig;
      r.message = e.what();
    }
    return r;
  };
  // independent runs, each in its own directory, at most `jobs` at a time
  for (std::size_t start = 0; start < results.size(); start += static_cast<std::size_t>(c.jobs)) {
    std::vector<std::future<CommandResult>> batch;
    const std::size_t stop = std::min(results.size(), start + static_cast<std::size_t>(c.jobs));
    for (std::size_t i = start; i < stop; ++i) batch.push_back(std::async(std::launch::async, one, i));
    for (std::size_t i = start; i < stop; ++i) results[i] = batch[i - start].get();
  }
  json rep{{"status", "ok"}, {"key", c.sweep_key}, {"command", c.sweep_command}};
  int worst = kExitOk;
  for (std::size_t i = 0; i < results.size(); ++i) {
    rep["runs"].push_back({{"value", c.sweep_values[i]}, {"exit_code", results[i].exit_code}, {"out", dirs[i]},
                           {"message", results[i].message}});
    worst = std::max(worst, results[i].exit_code);
  }
  if (worst != kExitOk) rep["status"] = "failed";
  out.res.exit_code = worst;
  json params = params_record(c);
  params["sweep"] = {{"key", c.sweep_key}, {"values", c.sweep_values}};
  out.report(rep, params);
}

} // namespace cmd_detail

/// Runs one configured command, writing its files under cfg.out. Numerical
/// failures still write report.json with the error and any iteration history.
inline CommandResult run_command(const RunConfig& cfg) {
  CommandResult res;
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec) {
    res.exit_code = kExitIo;
    res.message = IoError(cfg.out, "cannot create output directory: " + ec.message()).what();
    return res;
  }
  cmd_detail::Output out{cfg, fs::path(cfg.out), res};
  log(1, cfg.command + " -> " + cfg.out);
  try {
    if (cfg.command == "simulate") cmd_detail::simulate(out);
    else if (cfg.command == "exact") cmd_detail::exact(out);
    else if (cfg.command == "reduce") cmd_detail::reduce(out);
    else if (cfg.command == "verify") cmd_detail::verify(out);
    else if (cfg.command == "lie") cmd_detail::lie_report(out);
    else cmd_detail::sweep(out);
  } catch (const IoError& e) {
    res.exit_code = kExitIo;
    res.message = e.what();
  } catch (const ValidationError& e) {
    res.exit_code = kExitConfig;
    res.message = e.what();
  } catch (const ParseError& e) {
    res.exit_code = kExitConfig;
    res.message = e.what();
  } catch (const Error& e) {
    res.exit_code = kExitNumerical;
    res.message = e.what();
    json rep{{"status", "failed"}, {"error", e.what()}};
    if (const auto* it = dynamic_cast<const IterationError*>(&e)) {
      const auto& h = it->history();
      rep["iterations"] = h.size();
      rep["last_residual"] = it->last_residual();
      rep["tail_monotone"] = tail_monotone(h);
      rep["history_tail"] = std::vector<double>(h.end() - static_cast<long>(std::min<std::size_t>(h.size(), 20)), h.end());
    }
    if (const auto* is = dynamic_cast<const InvalidState*>(&e)) rep["time"] = is->time();
    try {
      out.report(rep, cmd_detail::params_record(cfg));
    } catch (const Error&) {
      res.exit_code = kExitIo;
    }
  }
  if (res.exit_code != kExitOk) log(0, "exit " + std::to_string(res.exit_code) + ": " + res.message);
  return res;
}

} // namespace flks
