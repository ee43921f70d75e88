#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "flks/commands.hpp"

using namespace flks;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string config_text(const std::string& name) { return slurp(fs::path(FLKS_CONFIG_DIR) / name); }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("flks_cli_" + name);
  fs::remove_all(p);
  return p;
}

// small, fast simulate run
RunConfig quick(const std::string& out, const std::vector<std::string>& extra = {}) {
  std::vector<std::string> o{"out=" + out, "grid.cells=40", "solver.t_end=0.2", "solver.frame_dt=0.05"};
  o.insert(o.end(), extra.begin(), extra.end());
  return parse_config("command = simulate\n", o);
}

template <class E, class F>
E capture(F f) {
  try {
    f();
  } catch (const E& e) {
    return e;
  }
  ADD_FAILURE() << "expected exception not thrown";
  throw std::logic_error("unreachable");
}

} // namespace

TEST(Config, MinimalEchoMatchesGolden) {
  const RunConfig c = parse_config(config_text("minimal_simulate.ini"));
  EXPECT_EQ(echo(c), slurp(fs::path(FLKS_TEST_DATA_DIR) / "minimal_simulate.echo"));
}

TEST(Config, TanhRunParses) {
  const RunConfig c = parse_config(config_text("simulate_tanh_bump.ini"));
  const ModelParams p = c.model();
  EXPECT_EQ(p.D, 0.8);
  EXPECT_EQ(p.tau, 0.1);
  EXPECT_EQ(c.alpha, 1.1);
  EXPECT_EQ(p.limiter.kind, FluxLimiter::Kind::Tanh);
  EXPECT_EQ(p.limiter.vmax, 1.1);
  EXPECT_EQ(p.limiter.s0, 1.4);
  const auto* d = std::get_if<ConstantDecay>(&p.decay);
  ASSERT_NE(d, nullptr);
  EXPECT_EQ(d->kappa0, 0.5);
  EXPECT_EQ(c.grid().n, 200);
  EXPECT_EQ(c.boundary(), BoundaryCondition::Neumann);
}

TEST(Config, NegativeDecayIsRejectedUnlessAllowed) {
  const auto e = capture<ValidationError>([] { parse_config("command = simulate\n[decay]\nkappa0 = -1\n"); });
  EXPECT_EQ(e.field(), "decay.kappa0");
  EXPECT_NO_THROW(parse_config("command = simulate\n[decay]\nkappa0 = -1\nallow_negative = true\n"));
  EXPECT_THROW(parse_config(config_text("negative_decay.ini")), ValidationError);
}

TEST(Config, ParseErrorsCarryPosition) {
  auto pe = capture<ParseError>([] { parse_config("command = simulate\n[model]\n  D = abc\n"); });
  EXPECT_EQ(pe.line(), 3);
  EXPECT_EQ(pe.column(), 7);
  pe = capture<ParseError>([] { parse_config("[model]\nQ = 1\n"); });
  EXPECT_EQ(pe.line(), 2);
  EXPECT_EQ(pe.column(), 1);
  EXPECT_NE(std::string(pe.what()).find("model.Q"), std::string::npos);
  pe = capture<ParseError>([] { parse_config("[model]\nD = 1\nD = 2\n"); });
  EXPECT_EQ(pe.line(), 3);
  pe = capture<ParseError>([] { parse_config("[model\n"); });
  EXPECT_EQ(pe.line(), 1);
  pe = capture<ParseError>([] { parse_config("[model]\njust words\n"); });
  EXPECT_EQ(pe.line(), 2);
  pe = capture<ParseError>([] { parse_config("", {"model.Q=1"}); });
  EXPECT_EQ(pe.line(), 0);
}

TEST(Config, ValidationNamesTheField) {
  EXPECT_EQ(capture<ValidationError>([] { parse_config("[model]\nD = 0\n"); }).field(), "model.D");
  EXPECT_EQ(capture<ValidationError>([] { parse_config("[grid]\nx_lo = 1\nx_hi = 0\n"); }).field().rfind("grid.", 0), 0u);
  EXPECT_THROW(parse_config("[solver]\nt_end = 0\n"), ValidationError);
  EXPECT_THROW(parse_config("[decay]\nkind = power_law\n"), ValidationError);
  EXPECT_NO_THROW(parse_config("command = reduce\n[decay]\nkind = power_law\n"));
}

TEST(Config, OverridesReplaceFileValues) {
  const RunConfig c = parse_config(config_text("simulate_tanh_bump.ini"), {"model.D=0.25", "limiter.kind=algebraic_sqrt"});
  EXPECT_EQ(c.D, 0.25);
  EXPECT_EQ(c.model().limiter.kind, FluxLimiter::Kind::AlgebraicSqrt);
  EXPECT_EQ(c.tau, 0.1);
}

TEST(Config, EchoRoundTrips) {
  for (const char* name : {"minimal_simulate.ini", "simulate_tanh_bump.ini", "exact_travelling.ini", "reduce_self_similar.ini",
                           "verify_invariance.ini", "lie_case3.ini", "sweep_diffusion.ini"}) {
    const RunConfig c = parse_config(config_text(name), {"model.tau=0.1234567890123456789"});
    EXPECT_EQ(echo(parse_config(echo(c))), echo(c)) << name;
    EXPECT_EQ(parse_config(echo(c)).tau, c.tau) << name;
  }
}

TEST(Csv, RoundTripsAtFullPrecision) {
  const Grid1D g(-1.0, 1.0, 8);
  FieldPair f(g, 0.1);
  for (std::size_t i = 0; i < g.nodes(); ++i) {
    f.u[i] = std::exp(g.x(i)) / 3.0;
    f.v[i] = 1e-300 * (i + 1) + std::nextafter(1.0, 2.0);
  }
  CsvTable t = trajectory_table({f, f}, g);
  t.params = {{"D", 0.1}};
  t.config = "a = 1\n\n[b]\nc = 2\n";
  const fs::path p = scratch("roundtrip.csv");
  export_csv(t, p.string());
  const CsvTable r = import_csv(p.string());
  EXPECT_EQ(r.kind, "trajectory");
  EXPECT_EQ(r.params, t.params);
  EXPECT_EQ(r.config, t.config);
  EXPECT_EQ(r.columns, t.columns);
  const auto u = r.column("u"), v = r.column("v");
  ASSERT_EQ(u.size(), 2 * g.nodes());
  for (std::size_t i = 0; i < g.nodes(); ++i) {
    EXPECT_EQ(u[i], f.u[i]);
    EXPECT_EQ(v[i], f.v[i]);
  }
  EXPECT_THROW(r.column("w"), DomainError);
  EXPECT_THROW(import_csv((scratch("missing") / "x.csv").string()), IoError);
}

TEST(Csv, EmptyTrajectoryIsHeaderOnly) {
  const Grid1D g(0.0, 1.0, 8);
  const CsvTable t = trajectory_table({}, g);
  const std::string text = to_csv_text(t);
  EXPECT_EQ(csv_body(text), "t,x,u,v\n");
  EXPECT_TRUE(parse_csv_text(text).rows.empty());
}

TEST(Csv, ReportFlattensNestedKeys) {
  const CsvTable t = report_table({{"a", {{"b", 1.5}, {"c", "s,t"}}}, {"d", {1, 2}}});
  const CsvTable r = parse_csv_text(to_csv_text(t));
  ASSERT_EQ(r.rows.size(), 4u);
  EXPECT_EQ(r.rows[0], (std::vector<std::string>{"a.b", "1.5"}));
  EXPECT_EQ(r.rows[1], (std::vector<std::string>{"a.c", "s,t"}));
  EXPECT_EQ(r.rows[3][0], "d.1");
}

TEST(Plot, ScriptsNameTheirCsv) {
  const fs::path dir = scratch("plot");
  fs::create_directories(dir);
  const std::string csv = (dir / "a.csv").string();
  EXPECT_THROW(emit_plot_script(PlotKind::Trajectory, csv, (dir / "p.py").string()), IoError);
  export_csv(trajectory_table({}, Grid1D(0, 1, 8)), csv);
  for (PlotKind k : {PlotKind::Trajectory, PlotKind::Profile, PlotKind::Report}) {
    emit_plot_script(k, csv, (dir / "p.py").string());
    const std::string s = slurp(dir / "p.py");
    EXPECT_NE(s.find(csv), std::string::npos);
    EXPECT_NE(s.find("savefig"), std::string::npos);
  }
  EXPECT_NE(plot_script_text(PlotKind::Trajectory, csv).find("contourf"), std::string::npos);
  EXPECT_NE(plot_script_text(PlotKind::Trajectory, csv).find("0.7"), std::string::npos);
}

TEST(Commands, SimulateWritesFilesAndIsDeterministic) {
  for (const char* initial : {"gaussian", "random"}) {
    const fs::path a = scratch(std::string("det_a_") + initial), b = scratch(std::string("det_b_") + initial);
    const std::string kind = std::string("initial.kind=") + initial;
    const CommandResult ra = run_command(quick(a.string(), {kind, "seed=7"}));
    const CommandResult rb = run_command(quick(b.string(), {kind, "seed=7"}));
    ASSERT_EQ(ra.exit_code, kExitOk) << ra.message;
    ASSERT_EQ(rb.exit_code, kExitOk) << rb.message;
    for (const char* f : {"trajectory.csv", "plot_trajectory.py", "report.json", "report.csv"})
      EXPECT_TRUE(fs::exists(a / f)) << f;
    const std::string ta = slurp(a / "trajectory.csv");
    EXPECT_EQ(csv_body(ta), csv_body(slurp(b / "trajectory.csv")));
    EXPECT_EQ(import_csv((a / "trajectory.csv").string()).column("t").back(), 0.2);
    EXPECT_EQ(ra.report["summary"]["frames"], 5);
  }
  const fs::path c = scratch("det_c"), d = scratch("det_d");
  run_command(quick(c.string(), {"initial.kind=random", "seed=1"}));
  run_command(quick(d.string(), {"initial.kind=random", "seed=2"}));
  EXPECT_NE(csv_body(slurp(c / "trajectory.csv")), csv_body(slurp(d / "trajectory.csv")));
}

TEST(Commands, ConfigFilesRun) {
  struct Case {
    const char* file;
    const char* command;
    int code;
  };
  // the invariance config checks a translation that exponential decay breaks
  for (const Case& k : {Case{"exact_travelling.ini", "exact", kExitOk}, Case{"reduce_self_similar.ini", "reduce", kExitOk},
                        Case{"lie_case3.ini", "lie", kExitOk}, Case{"verify_invariance.ini", "verify", kExitNumerical}}) {
    const fs::path out = scratch(k.command);
    const RunConfig c = parse_config(config_text(k.file), {"out=" + out.string()});
    EXPECT_EQ(c.command, k.command);
    const CommandResult r = run_command(c);
    EXPECT_EQ(r.exit_code, k.code) << k.file << ": " << r.message;
    EXPECT_TRUE(fs::exists(out / "report.json")) << k.file;
  }
}

TEST(Commands, ExactHomogeneousResidualIsSmall) {
  const fs::path out = scratch("exact_h");
  const RunConfig c = parse_config("command = exact\n", {"out=" + out.string(), "grid.cells=20", "exact.frames=11"});
  const CommandResult r = run_command(c);
  ASSERT_EQ(r.exit_code, kExitOk) << r.message;
  EXPECT_LT(r.report["residual"]["sup_norm"].get<double>(), 1e-6);
}

TEST(Commands, VerifyInvariantTranslation) {
  const fs::path out = scratch("verify_x2");
  const RunConfig c = parse_config(config_text("verify_invariance.ini"), {"out=" + out.string(), "decay.lambda=0"});
  const CommandResult r = run_command(c);
  EXPECT_EQ(r.exit_code, kExitOk) << r.message;
}

TEST(Commands, NumericalFailureWritesReport) {
  const fs::path out = scratch("fail");
  const RunConfig c = quick(out.string(), {"solver.max_steps=3"});
  const CommandResult r = run_command(c);
  EXPECT_EQ(r.exit_code, kExitNumerical);
  EXPECT_EQ(r.report["status"], "failed");
  EXPECT_TRUE(r.report.contains("time"));
  EXPECT_TRUE(fs::exists(out / "report.json"));
}

TEST(Commands, UnwritableOutputIsIoError) {
  const fs::path file = scratch("blocker");
  std::ofstream(file) << "x";
  const CommandResult r = run_command(quick((file / "sub").string()));
  EXPECT_EQ(r.exit_code, kExitIo);
}

TEST(Commands, SweepRunsEveryValue) {
  const fs::path out = scratch("sweep");
  const RunConfig c = parse_config("command = sweep\n[sweep]\nkey = model.D\nvalues = 0.2, 0.4, -1\njobs = 2\n",
                                   {"out=" + out.string(), "grid.cells=30", "solver.t_end=0.1", "solver.frame_dt=0.05"});
  const CommandResult r = run_command(c);
  EXPECT_EQ(r.exit_code, kExitConfig);
  const auto& runs = r.report["runs"];
  ASSERT_EQ(runs.size(), 3u);
  EXPECT_EQ(runs[0]["exit_code"], kExitOk);
  EXPECT_EQ(runs[1]["exit_code"], kExitOk);
  EXPECT_EQ(runs[2]["exit_code"], kExitConfig);
  EXPECT_TRUE(fs::exists(out / "run_0" / "trajectory.csv"));
  EXPECT_TRUE(fs::exists(out / "run_1" / "trajectory.csv"));
  EXPECT_NE(csv_body(slurp(out / "run_0" / "trajectory.csv")), csv_body(slurp(out / "run_1" / "trajectory.csv")));
}

TEST(Plot, GeneratedScriptsRun) {
  if (std::system("python3 -c 'import matplotlib' > /dev/null 2>&1") != 0) GTEST_SKIP() << "python3 with matplotlib not available";
  const fs::path out = scratch("plot_run");
  const CommandResult r = run_command(quick(out.string()));
  ASSERT_EQ(r.exit_code, kExitOk) << r.message;
  emit_plot_script(PlotKind::Report, (out / "report.csv").string(), (out / "plot_report.py").string());
  for (const char* s : {"plot_trajectory.py", "plot_report.py"}) {
    const std::string cmd = "python3 " + (out / s).string() + " > /dev/null 2>&1";
    EXPECT_EQ(std::system(cmd.c_str()), 0) << s;
  }
  EXPECT_TRUE(fs::exists(out / "trajectory.png"));
  EXPECT_TRUE(fs::exists(out / "report.png"));
}
