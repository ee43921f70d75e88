#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "flks/reduced_systems.hpp"
#include "oracles.hpp"

using namespace flks;

namespace {

ModelParams base_params() {
  ModelParams p;
  p.D = 0.8;
  p.tau = 0.1;
  p.limiter = FluxLimiter::tanh(1.1, 1.4);
  p.decay = ConstantDecay{0.5};
  return p;
}

ReducedProblem homogeneous(DecayLaw law, double t0, double t1, std::size_t n, double U0, double V0) {
  ReducedProblem pr;
  pr.kind = ReducedKind::HomogeneousODE;
  pr.params = base_params();
  pr.params.decay = law;
  pr.lo = t0;
  pr.hi = t1;
  pr.n = n;
  pr.initial = {U0, V0};
  return pr;
}

ReducedProblem self_similar(double vmax) {
  ReducedProblem pr;
  pr.kind = ReducedKind::SelfSimilarSystem;
  pr.params = base_params();
  pr.params.limiter = FluxLimiter::tanh_log(vmax, 0.51);
  pr.params.decay = PowerLawDecay{0.5};
  pr.lo = 0.0;
  pr.hi = 10.0;
  pr.n = 2000;
  return pr;
}

} // namespace

TEST(Homogeneous, SteadyLevel) {
  auto prof = integrate_homogeneous(homogeneous(ConstantDecay{0.5}, 0.0, 2.0, 2000, 1.0, 0.0));
  EXPECT_NEAR(prof.V.back(), 1.9999092001404750, 1e-10);
  for (double u : prof.U) EXPECT_EQ(u, 1.0);
}

TEST(Homogeneous, PowerLawMatchesClosedForm) {
  auto prof = integrate_homogeneous(homogeneous(PowerLawDecay{0.2}, 1.0, 10.0, 90000, 1.0, 0.0));
  auto ex = case3_homogeneous(0.2, 0.1, 1.0, 0.0, 1.0);
  double e = 0.0;
  for (std::size_t k = 0; k < prof.t.size(); k += 100)
    if (k > 0) e = std::max(e, std::abs(prof.V[k] / ex.eval_v(0, prof.t[k]) - 1.0));
  EXPECT_LT(e, 1e-8);
}

TEST(Homogeneous, LongLivedSignalGrows) {
  auto prof = integrate_homogeneous(homogeneous(ExponentialDecay{0.5, -0.3}, 0.0, 10.0, 10000, 1.0, 0.0));
  for (std::size_t k = 1000; k < prof.V.size(); ++k) EXPECT_GT(prof.V[k], prof.V[k - 1]);
  EXPECT_GT(prof.V.back(), 20.0);
}

TEST(Homogeneous, FourthOrder) {
  auto err = [](std::size_t n) {
    auto prof = integrate_homogeneous(homogeneous(ExponentialDecay{0.5, 0.2}, 0.0, 1.0, n, 1.0, 0.0));
    return std::abs(prof.V.back() - case4_homogeneous(0.5, 0.2, 0.1, 1.0, 0.0, 0.0).eval_v(0, 1.0));
  };
  const double e1 = err(50), e2 = err(100);
  EXPECT_GT(e1 / e2, 14.0);
  EXPECT_LT(e1 / e2, 18.0);
}

TEST(Homogeneous, Validation) {
  auto pr = homogeneous(ConstantDecay{0.5}, 1.0, 1.0, 10, 1.0, 0.0);
  EXPECT_THROW(integrate_homogeneous(pr), ValidationError);
  pr = homogeneous(ConstantDecay{0.5}, 0.0, 1.0, 10, 1.0, 0.0);
  pr.initial = {1.0};
  EXPECT_THROW(integrate_homogeneous(pr), ValidationError);
}

TEST(SteadyState, UniformStateIsExact) {
  ReducedProblem pr;
  pr.kind = ReducedKind::SteadyStateBVP;
  pr.params = base_params();
  pr.lo = 0;
  pr.hi = 5;
  pr.n = 100;
  pr.U_guess.assign(101, 1.0);
  pr.V_guess.assign(101, 2.0);
  auto st = solve_steady_state(pr);
  EXPECT_LT(st.defect, 1e-12);
  EXPECT_EQ(st.iterations, 0);
  for (double v : st.V) EXPECT_NEAR(v, 2.0, 1e-14);
}

TEST(SteadyState, PerturbedStartReturnsToUniform) {
  ReducedProblem pr;
  pr.kind = ReducedKind::SteadyStateBVP;
  pr.params = base_params();
  pr.lo = 0;
  pr.hi = 5;
  pr.n = 100;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> noise(-1e-2, 1e-2);
  for (int i = 0; i <= 100; ++i) {
    pr.U_guess.push_back(1.0 + noise(rng));
    pr.V_guess.push_back(2.0 + noise(rng));
  }
  SteadyBC bc;
  bc.mass = 5.0;
  auto st = solve_steady_state(pr, bc);
  EXPECT_LT(st.defect, 1e-10);
  for (std::size_t i = 0; i < st.U.size(); ++i) {
    EXPECT_NEAR(st.U[i], 1.0, 1e-9);
    EXPECT_NEAR(st.V[i], 2.0, 1e-9);
  }
}

TEST(SteadyState, SecondOrderUnderRefinement) {
  auto solve = [](std::size_t n) {
    ReducedProblem pr;
    pr.kind = ReducedKind::SteadyStateBVP;
    pr.params = base_params();
    pr.lo = 0;
    pr.hi = 2;
    pr.n = n;
    SteadyBC bc;
    bc.type = SteadyBC::Type::Dirichlet;
    bc.U_left = 1.0;
    bc.U_right = 0.5;
    bc.V_left = 0.0;
    bc.V_right = 3.0;
    return solve_steady_state(pr, bc);
  };
  auto ref = solve(1280);
  std::vector<double> err;
  for (std::size_t n : {40, 80, 160}) {
    auto st = solve(n);
    EXPECT_LT(st.defect, 1e-10);
    double e = 0.0;
    for (std::size_t i = 0; i <= n; ++i) e = std::max(e, std::abs(st.U[i] - ref.U[i * (1280 / n)]));
    err.push_back(e);
  }
  EXPECT_NEAR(err[0] / err[1], 4.0, 0.6);
  EXPECT_NEAR(err[1] / err[2], 4.0, 0.6);
}

TEST(SteadyState, RequiresConstantDecay) {
  ReducedProblem pr;
  pr.kind = ReducedKind::SteadyStateBVP;
  pr.params = base_params();
  pr.params.decay = PowerLawDecay{0.5};
  pr.n = 20;
  EXPECT_THROW(solve_steady_state(pr), DomainError);
}

TEST(TravellingODE, ZeroDataStaysZero) {
  ReducedProblem pr;
  pr.kind = ReducedKind::TravellingWaveODE;
  pr.params = base_params();
  pr.alpha = 1.1;
  pr.lo = -5;
  pr.hi = 5;
  pr.n = 100;
  pr.initial = {0, 0, 0, 0};
  auto w = integrate_travelling_wave(pr);
  for (std::size_t j = 0; j < w.y.size(); ++j) {
    EXPECT_EQ(w.U[j], 0.0);
    EXPECT_EQ(w.V[j], 0.0);
  }
}

TEST(TravellingODE, CellFreeMatchesExponentials) {
  ReducedProblem pr;
  pr.kind = ReducedKind::TravellingWaveODE;
  pr.params = base_params();
  pr.alpha = 1.1;
  pr.lo = -5;
  pr.hi = 5;
  pr.n = 10000;
  const auto r = travelling_roots(1.1, 0.1, 0.5);
  const double A = 0.7, B = 0.2;
  auto Vex = [&](double y) { return A * std::exp(r.plus * y) + B * std::exp(r.minus * y); };
  auto sex = [&](double y) { return A * r.plus * std::exp(r.plus * y) + B * r.minus * std::exp(r.minus * y); };
  pr.initial = {0.0, 0.0, Vex(-5), sex(-5)};
  auto w = integrate_travelling_wave(pr);
  double e = 0.0;
  for (std::size_t j = 0; j < w.y.size(); ++j) e = std::max(e, std::abs(w.V[j] - Vex(w.y[j])));
  EXPECT_LT(e, 1e-7);

  // the dedicated cell-free integrator agrees with the front family
  ReducedProblem cf = pr;
  cf.kind = ReducedKind::CellFreeWaveODE;
  cf.initial = {Vex(-5), sex(-5)};
  auto c = integrate_cellfree_wave(cf);
  auto front = make_cellfree_front(1.1, 0.1, 0.5, 0.0, A, B);
  double ef = 0.0;
  for (std::size_t j = 0; j < c.y.size(); ++j) ef = std::max(ef, std::abs(c.V[j] - front.v(-c.y[j] / 1.1, 0.0)));
  EXPECT_LT(ef, 1e-7);
}

TEST(TravellingODE, ReproducesQuadratureProfile) {
  TravellingWaveOptions o;
  o.params = base_params();
  TravellingWave tw;
  case2_travelling_tanh(o, &tw);
  ReducedProblem pr;
  pr.kind = ReducedKind::TravellingWaveODE;
  pr.params = base_params();
  pr.alpha = 1.1;
  pr.lo = -5;
  pr.hi = 5;
  pr.n = 10000;
  pr.initial = {tw.U_at(-5), tw.dU[250], tw.V_at(-5), tw.s_at(-5)};
  ASSERT_NEAR(tw.y[250], -5.0, 1e-12);
  auto w = integrate_travelling_wave(pr);
  double e = 0.0;
  for (std::size_t j = 0; j < w.y.size(); j += 10)
    e = std::max({e, std::abs(w.U[j] - tw.U_at(w.y[j])), std::abs(w.V[j] - tw.V_at(w.y[j]))});
  EXPECT_LT(e, 1e-5);
}

TEST(TravellingODE, Blowup) {
  ReducedProblem pr;
  pr.kind = ReducedKind::TravellingWaveODE;
  pr.params = base_params();
  pr.alpha = 1.1;
  pr.lo = 0;
  pr.hi = 60;
  pr.n = 6000;
  pr.initial = {1.0, 1.0, 0.0, 0.0};
  EXPECT_THROW(integrate_travelling_wave(pr), BlowupDetected);
}

TEST(TravellingDefect, QuadratureAtBaseParameters) {
  TravellingWaveOptions o;
  o.params = base_params();
  TravellingWave tw;
  case2_travelling_tanh(o, &tw);
  auto d = travelling_wave_defect(tw, o.params, 1.1, 0.5, -5, 5);
  EXPECT_LT(d.U_equation, 1e-6);
  EXPECT_LT(d.V_equation, 1e-6);
}

TEST(SelfSimilar, FluxOffGivesGaussian) {
  auto pr = self_similar(0.0);
  auto s = solve_self_similar(pr, 0.5);
  for (std::size_t i = 0; i < s.xi.size(); ++i)
    EXPECT_NEAR(s.U[i] / s.U[0], std::exp(-s.xi[i] * s.xi[i] / (4 * 0.8)), 1e-10);
  EXPECT_LT(s.defects.U_equation, 1e-8);
  EXPECT_LT(s.defects.V_equation, 1e-8);
}

TEST(SelfSimilar, ZeroForcingGivesZeroV) {
  auto pr = self_similar(1.1);
  pr.U0 = 0.0;
  auto s = solve_self_similar(pr, 0.5);
  for (double v : s.V) EXPECT_EQ(v, 0.0);
  EXPECT_LT(s.defects.V_equation, 1e-12);
}

TEST(SelfSimilar, FullFluxConverges) {
  auto pr = self_similar(1.1);
  auto s = solve_self_similar(pr, 0.5);
  EXPECT_LT(s.history.back(), 1e-8);
  EXPECT_LT(s.defects.U_equation, 1e-6);
  EXPECT_LT(s.defects.V_equation, 1e-6);
  EXPECT_LT(s.defects.S_vs_dV, 1e-6);
  // the PDE-consistent form of the v equation is a different equation
  EXPECT_GT(s.defects.pde_consistent, 1e-3);
  EXPECT_TRUE(tail_monotone(s.history));

  // doubled grid agrees
  auto fine = pr;
  fine.n = 4000;
  auto f = solve_self_similar(fine, 0.5);
  double e = 0.0;
  for (std::size_t i = 0; i < s.U.size(); ++i) e = std::max(e, std::abs(s.U[i] - f.U[2 * i]));
  EXPECT_LT(e, 1e-4);
}

TEST(SelfSimilar, RefinementReducesDefect) {
  auto coarse = self_similar(1.1);
  coarse.n = 500;
  auto fine = coarse;
  fine.n = 1000;
  const auto a = solve_self_similar(coarse, 0.5), b = solve_self_similar(fine, 0.5);
  EXPECT_GE(a.defects.V_equation / b.defects.V_equation, 4.0);
  EXPECT_GE(a.defects.U_equation / b.defects.U_equation, 4.0);
}

TEST(SelfSimilar, ReportsNonConvergence) {
  auto pr = self_similar(1.1);
  pr.picard.max_iter = 3;
  try {
    solve_self_similar(pr, 0.5);
    FAIL();
  } catch (const NoConvergence& e) {
    EXPECT_EQ(e.history().size(), 3u);
    EXPECT_TRUE(tail_monotone(e.history()));
  }
}

TEST(SelfSimilar, Validation) {
  auto pr = self_similar(1.1);
  pr.params.limiter = FluxLimiter::tanh(1.1, 1.4);
  EXPECT_THROW(solve_self_similar(pr, 0.5), ValidationError);
}
