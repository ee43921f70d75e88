#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flks/core.hpp"
#include "flks/describe.hpp"
#include "flks/quadrature.hpp"

namespace flks {

/// A closed-form or quadrature solution (u(x,t), v(x,t)) with the constants
/// that define it.
struct ExactSolution {
  CaseTag tag = CaseTag::I_Arbitrary;
  std::string subcase;
  std::function<double(double, double)> u;
  std::function<double(double, double)> v;
  json params = json::object();
  std::vector<std::string> assumptions;

  double eval_u(double x, double t) const { return u(x, t); }
  double eval_v(double x, double t) const { return v(x, t); }
};

// ------------------------------------------------------ homogeneous families

/// u = C, tau v' = -kappa(t) v + C, v(t0) = V0, by integrating factor.
inline ExactSolution case1_homogeneous(const ModelParams& params, const DecayLaw& law, double C, double V0,
                                       double t0) {
  params.validate();
  validate(law);
  const double tau = params.tau;
  LinearFirstOrderProblem p;
  p.a = [law, tau](double t) { return evaluate_decay(law, t) / tau; };
  p.b = [C, tau](double) { return C / tau; };
  p.t0 = t0;
  p.y0 = V0;
  p.a_integral = [law, tau, t0](double t) { return decay_integral(law, t0, t) / tau; };
  p.constant = std::holds_alternative<ConstantDecay>(law);
  evaluate_decay(law, t0); // surfaces domain errors at construction

  ExactSolution s;
  s.tag = classify(law).tag;
  s.subcase = "I.homogeneous";
  s.u = [C](double, double) { return C; };
  s.v = [p](double, double t) { return solve_linear_first_order(p, t); };
  s.params = {{"C", C}, {"V0", V0}, {"t0", t0}, {"tau", tau}, {"decay", describe(law)}};
  s.assumptions = {"spatially uniform data", "u is conserved and equals C"};
  return s;
}

/// kappa = mu/t. The generic branch has a power-law transient; mu = -tau
/// gives logarithmic growth.
inline ExactSolution case3_homogeneous(double mu, double tau, double C, double V0, double t0) {
  if (!(tau > 0.0)) throw ValidationError("model.tau", "must be > 0");
  if (!(t0 > 0.0)) throw DomainError("power-law decay requires t0 > 0");
  const double sum = mu + tau;
  const bool log_branch = std::abs(sum) < 1e-12 * std::max(std::abs(mu), tau);
  ExactSolution s;
  s.tag = CaseTag::III_PowerLaw;
  s.subcase = log_branch ? "III.homogeneous_log" : "III.homogeneous";
  s.u = [C](double, double) { return C; };
  if (log_branch) {
    s.v = [=](double, double t) {
      if (!(t > 0.0)) throw DomainError("power-law solution requires t > 0");
      return (C / tau) * t * std::log(t / t0) + (V0 / t0) * t;
    };
  } else {
    s.v = [=](double, double t) {
      if (!(t > 0.0)) throw DomainError("power-law solution requires t > 0");
      return C * t / sum + (sum * V0 - C * t0) / sum * std::pow(t0 / t, mu / tau);
    };
  }
  s.params = {{"mu", mu}, {"tau", tau}, {"C", C}, {"V0", V0}, {"t0", t0}, {"log_branch", log_branch}};
  s.assumptions = {"spatially uniform data", "t > 0"};
  return s;
}

/// kappa = kappa0 e^{lambda t}; v is expressed through Ei(a e^{lambda t}) with
/// a = kappa0/(tau lambda).
inline ExactSolution case4_homogeneous(double kappa0, double lambda, double tau, double C, double V0, double t0) {
  if (!(tau > 0.0)) throw ValidationError("model.tau", "must be > 0");
  if (lambda == 0.0) {
    ModelParams mp;
    mp.tau = tau;
    mp.decay = ExponentialDecay{kappa0, 0.0};
    ExactSolution s = case1_homogeneous(mp, mp.decay, C, V0, t0);
    s.tag = CaseTag::IV_Exponential;
    s.subcase = "IV.homogeneous";
    return s;
  }
  const double a = kappa0 / (tau * lambda);
  if (a == 0.0) throw DomainError("Ei argument vanishes for kappa0 = 0");
  const double w0 = a * std::exp(lambda * t0);
  if (!std::isfinite(w0)) throw OverflowGuard("Ei argument overflows at t0");
  const double ei0 = exp_integral_Ei_scaled(w0);
  ExactSolution s;
  s.tag = CaseTag::IV_Exponential;
  s.subcase = "IV.homogeneous";
  s.u = [C](double, double) { return C; };
  // e^{-w}(Ei(w) - Ei(w0)) is formed from the scaled Ei so that large |a|
  // (small lambda) never overflows
  s.v = [=](double, double t) {
    const double w = a * std::exp(lambda * t);
    if (!std::isfinite(w)) throw OverflowGuard("Ei argument overflows at t=" + std::to_string(t));
    const double decay = std::exp(w0 - w);
    if (C == 0.0) return decay * V0;
    return decay * V0 + (C / (tau * lambda)) * (exp_integral_Ei_scaled(w) - decay * ei0);
  };
  s.params = {{"kappa0", kappa0}, {"lambda", lambda}, {"tau", tau}, {"C", C},
              {"V0", V0},         {"t0", t0},         {"a", a}};
  s.assumptions = {"spatially uniform data"};
  return s;
}

// ------------------------------------------------------- travelling waves

/// Roots of alpha^2 r^2 - tau r - k = 0, r_plus > r_minus.
struct RootPair {
  double plus;
  double minus;
};

inline RootPair travelling_roots(double alpha, double tau, double k) {
  if (alpha == 0.0) throw DomainError("wave parameter alpha must be nonzero");
  const double disc = tau * tau + 4.0 * alpha * alpha * k;
  if (disc < 0.0) throw ComplexRoots("discriminant " + std::to_string(disc) + " < 0: oscillatory front");
  const double sq = std::sqrt(disc);
  const double a2 = 2.0 * alpha * alpha;
  // the root of smaller magnitude via Vieta avoids cancellation
  const double big = tau >= 0.0 ? (tau + sq) / a2 : (tau - sq) / a2;
  const double small = big != 0.0 ? -k / (alpha * alpha * big) : 0.0;
  return big >= small ? RootPair{big, small} : RootPair{small, big};
}

struct TravellingWaveOptions {
  ModelParams params;
  double alpha = 1.1;
  double kappa0 = 0.5;
  double U_ref = 1.0;
  double y0 = 0.0;
  // nullopt: C1 is fixed by requiring U to stay bounded on the right
  std::optional<double> C1;
  // when given, s is taken as data and no self-consistency loop runs
  std::function<double(double)> s_profile;
  double beta = 0.0; // constant initial guess for s
  double y_min = -10.0;
  double y_max = 10.0;
  std::size_t n = 1000;
  PicardOptions picard{0.3, 1e-12, 2000};
};

/// Sampled profiles of the tanh travelling wave y = t - alpha x, with cubic
/// Hermite interpolation between nodes.
struct TravellingWave {
  std::vector<double> y, U, V, s;
  std::vector<double> dU, ds;
  std::vector<double> history;
  int iterations = 0;
  double C1 = 0.0;
  RootPair roots{0.0, 0.0};
  bool bounded_closure = true;
  double h = 0.0;

  double U_at(double yy) const { return hermite(U, dU, yy); }
  double V_at(double yy) const { return hermite(V, s, yy); }
  double s_at(double yy) const { return hermite(s, ds, yy); }

private:
  double hermite(const std::vector<double>& f, const std::vector<double>& df, double yy) const {
    if (!(yy >= y.front() - 1e-12 && yy <= y.back() + 1e-12))
      throw DomainError("y=" + std::to_string(yy) + " outside the travelling-wave window");
    const std::size_t n = y.size() - 1;
    std::size_t j = static_cast<std::size_t>(std::max(0.0, std::floor((yy - y.front()) / h)));
    j = std::min(j, n - 1);
    const double q = (yy - y[j]) / h;
    const double q2 = q * q, q3 = q2 * q;
    return (2 * q3 - 3 * q2 + 1) * f[j] + (q3 - 2 * q2 + q) * h * df[j] + (-2 * q3 + 3 * q2) * f[j + 1] +
           (q3 - q2) * h * df[j + 1];
  }
};

namespace detail {

struct WaveSweep {
  std::vector<double> U, V, s, g;
  double C1;
};

// One pass of the quadratures for a given s: U from the first integral, V and
// V' from the bounded Green's kernel.
inline WaveSweep wave_sweep(const TravellingWaveOptions& o, const std::vector<double>& s_in, double h,
                            std::size_t i0, const RootPair& r) {
  const std::size_t N = s_in.size();
  const double D = o.params.D, al = o.alpha, da2 = D * al * al;
  WaveSweep w;
  w.g.resize(N);
  for (std::size_t j = 0; j < N; ++j) w.g[j] = (1.0 - al * F(o.params.limiter, -al * s_in[j])) / da2;
  const std::vector<double> G = cumulative_integral(w.g, h, i0);
  const std::vector<double> ones(N, 1.0);
  w.U.resize(N);
  if (o.C1) {
    w.C1 = *o.C1;
    const std::vector<double> I = exp_weighted_integral(ones, G, h, i0);
    for (std::size_t j = 0; j < N; ++j) {
      if (G[j] > kExponentGuard) throw OverflowGuard("travelling-wave integrating factor overflows");
      w.U[j] = o.U_ref * std::exp(G[j]) + (w.C1 / da2) * I[j];
    }
  } else {
    // L_j = int_{y_j}^{y_max} e^{G_j - G}; U proportional to L stays bounded
    std::vector<double> L = exp_weighted_integral(ones, G, h, N - 1);
    for (auto& v : L) v = -v;
    if (!(L[i0] > 0.0)) throw DomainError("bounded closure degenerate at the reference point");
    for (std::size_t j = 0; j < N; ++j) w.U[j] = o.U_ref * L[j] / L[i0];
    w.C1 = -o.U_ref * da2 / L[i0];
  }
  const double c = 1.0 / (al * al * (r.plus - r.minus));
  const std::vector<double> Im = exp_kernel_integral(w.U, h, 0, r.minus);
  std::vector<double> Ip = exp_kernel_integral(w.U, h, N - 1, r.plus);
  w.V.resize(N);
  w.s.resize(N);
  for (std::size_t j = 0; j < N; ++j) {
    Ip[j] = -Ip[j];
    w.V[j] = c * (Im[j] + Ip[j]);
    w.s[j] = c * (r.minus * Im[j] + r.plus * Ip[j]);
  }
  return w;
}

} // namespace detail

/// Travelling wave for the tanh limiter with constant decay kappa0. U follows
/// from the first integral D alpha^2 U' = U (1 - alpha F(-alpha s)) + C1, V from
/// the Green's kernel of alpha^2 V'' - tau V' - kappa0 V = -U with both
/// exponential branches removed, and s = V' is iterated to self-consistency.
inline TravellingWave solve_travelling_tanh(const TravellingWaveOptions& o) {
  o.params.validate();
  if (o.params.limiter.kind != FluxLimiter::Kind::Tanh)
    throw DomainError("travelling-wave quadrature requires the tanh limiter");
  if (o.alpha == 0.0) throw DomainError("wave parameter alpha must be nonzero");
  if (!(o.y_max > o.y_min) || o.n < 8) throw DomainError("travelling-wave window needs y_max > y_min, n >= 8");
  if (!(o.y0 >= o.y_min && o.y0 <= o.y_max)) throw DomainError("reference point y0 outside the window");

  TravellingWave tw;
  tw.roots = travelling_roots(o.alpha, o.params.tau, o.kappa0);
  tw.h = (o.y_max - o.y_min) / static_cast<double>(o.n);
  tw.bounded_closure = !o.C1.has_value();
  const std::size_t N = o.n + 1;
  tw.y.resize(N);
  for (std::size_t j = 0; j < N; ++j) tw.y[j] = o.y_min + tw.h * static_cast<double>(j);
  const double pos = (o.y0 - o.y_min) / tw.h;
  const std::size_t i0 = static_cast<std::size_t>(std::lround(pos));
  if (std::abs(pos - static_cast<double>(i0)) > 1e-9) throw DomainError("reference point y0 must be a grid node");

  std::vector<double> s(N, o.beta);
  if (o.s_profile) {
    for (std::size_t j = 0; j < N; ++j) s[j] = o.s_profile(tw.y[j]);
    tw.iterations = 0;
  } else {
    auto map = [&](const std::vector<double>& sk) { return detail::wave_sweep(o, sk, tw.h, i0, tw.roots).s; };
    PicardResult pr = picard_iterate(map, s, o.picard);
    s = std::move(pr.profile);
    tw.history = std::move(pr.history);
    tw.iterations = pr.iterations;
  }
  detail::WaveSweep w = detail::wave_sweep(o, s, tw.h, i0, tw.roots);
  tw.U = std::move(w.U);
  tw.V = std::move(w.V);
  tw.s = std::move(w.s);
  tw.C1 = w.C1;
  const double D = o.params.D, al = o.alpha, tau = o.params.tau;
  tw.dU.resize(N);
  tw.ds.resize(N);
  for (std::size_t j = 0; j < N; ++j) {
    const double g = (1.0 - al * F(o.params.limiter, -al * tw.s[j])) / (D * al * al);
    tw.dU[j] = g * tw.U[j] + tw.C1 / (D * al * al);
    tw.ds[j] = (tau * tw.s[j] + o.kappa0 * tw.V[j] - tw.U[j]) / (al * al);
  }
  return tw;
}

inline ExactSolution case2_travelling_tanh(const TravellingWaveOptions& o, TravellingWave* out = nullptr) {
  auto tw = std::make_shared<TravellingWave>(solve_travelling_tanh(o));
  if (out) *out = *tw;
  const double al = o.alpha;
  ExactSolution sol;
  sol.tag = CaseTag::II_Constant;
  sol.subcase = "II.travelling_tanh";
  sol.u = [tw, al](double x, double t) { return tw->U_at(t - al * x); };
  sol.v = [tw, al](double x, double t) { return tw->V_at(t - al * x); };
  sol.params = {{"alpha", al},
                {"kappa0", o.kappa0},
                {"U_ref", o.U_ref},
                {"y0", o.y0},
                {"C1", tw->C1},
                {"C1_s", 0.0},
                {"C2_s", 0.0},
                {"r_plus", tw->roots.plus},
                {"r_minus", tw->roots.minus},
                {"beta", o.beta},
                {"closure", tw->bounded_closure ? "bounded" : "prescribed_C1"},
                {"window", {o.y_min, o.y_max}},
                {"n", o.n},
                {"iterations", tw->iterations},
                {"model", describe(o.params)}};
  sol.assumptions = {"constant decay kappa0", "tanh limiter",
                     "exponential homogeneous branches of V removed",
                     "evaluation restricted to the y window"};
  if (tw->bounded_closure) sol.assumptions.push_back("C1 chosen so that U is bounded as y grows");
  return sol;
}

// ----------------------------------------------------------- cell-free front

struct CellFreeFront {
  double alpha, tau, kappa0, lambda, A, B;
  double r1, r2;

  double v(double x, double t) const {
    const double y = t - alpha * x;
    return std::exp(-lambda * t) * (A * std::exp(r1 * y) + B * std::exp(r2 * y));
  }
  double v_t(double x, double t) const {
    const double y = t - alpha * x;
    return -lambda * v(x, t) + std::exp(-lambda * t) * (A * r1 * std::exp(r1 * y) + B * r2 * std::exp(r2 * y));
  }
  double v_x(double x, double t) const {
    const double y = t - alpha * x;
    return -alpha * std::exp(-lambda * t) * (A * r1 * std::exp(r1 * y) + B * r2 * std::exp(r2 * y));
  }
  double v_xx(double x, double t) const {
    const double y = t - alpha * x;
    return alpha * alpha * std::exp(-lambda * t) *
           (A * r1 * r1 * std::exp(r1 * y) + B * r2 * r2 * std::exp(r2 * y));
  }
  /// tau v_t - v_xx + kappa0 e^{lambda t} v, the v-equation with u = 0.
  double residual(double x, double t) const {
    return tau * v_t(x, t) - v_xx(x, t) + kappa0 * std::exp(lambda * t) * v(x, t);
  }
  /// Same with the decay frozen at kappa0.
  double residual_frozen_decay(double x, double t) const {
    return tau * v_t(x, t) - v_xx(x, t) + kappa0 * v(x, t);
  }
};

inline CellFreeFront make_cellfree_front(double alpha, double tau, double kappa0, double lambda, double A,
                                         double B) {
  if (alpha == 0.0) throw DomainError("wave parameter alpha must be nonzero");
  const RootPair r = travelling_roots(alpha, tau, kappa0 - tau * lambda);
  return {alpha, tau, kappa0, lambda, A, B, r.plus, r.minus};
}

inline ExactSolution case4_cellfree_front(double alpha, double tau, double kappa0, double lambda, double A,
                                          double B) {
  const CellFreeFront f = make_cellfree_front(alpha, tau, kappa0, lambda, A, B);
  ExactSolution s;
  s.tag = CaseTag::IV_Exponential;
  s.subcase = "IV.cellfree_front";
  s.u = [](double, double) { return 0.0; };
  s.v = [f](double x, double t) { return f.v(x, t); };
  s.params = {{"alpha", alpha}, {"tau", tau}, {"kappa0", kappa0}, {"lambda", lambda},
              {"A", A},         {"B", B},     {"r_plus", f.r1},   {"r_minus", f.r2}};
  s.assumptions = {"u = 0", "real roots"};
  if (lambda != 0.0)
    s.assumptions.push_back("exact only for the decay frozen at kappa0; the residual with kappa0 e^{lambda t} is "
                            "kappa0 (e^{lambda t} - 1) v");
  return s;
}

// ------------------------------------------------- Weber-Fechner X4 profile

struct X4Profile {
  std::vector<double> x, U, mu;
  double t = 0.0;
};

/// U(x, t) from the first integral D U_x - U F(e^{lambda t} V') = C1(t), with
/// U(x0, t) = U_ref.
inline X4Profile case4_X4_quadrature(const ModelParams& params, double lambda,
                                     const std::function<double(double)>& dV,
                                     const std::function<double(double)>& C1_fn, double U_ref, double x0,
                                     const Grid1D& grid, double t) {
  params.validate();
  if (params.limiter.kind != FluxLimiter::Kind::WeberFechnerLog)
    throw DomainError("X4 quadrature requires the Weber-Fechner limiter");
  const std::size_t N = grid.nodes();
  const double h = grid.dx();
  const double pos = (x0 - grid.x_lo) / h;
  const std::size_t i0 = static_cast<std::size_t>(std::lround(pos));
  if (pos < -1e-9 || i0 >= N || std::abs(pos - static_cast<double>(i0)) > 1e-9)
    throw DomainError("reference point x0 must be a grid node");
  X4Profile p;
  p.t = t;
  p.x = grid.coordinates();
  const double growth = std::exp(lambda * t);
  std::vector<double> f(N);
  for (std::size_t j = 0; j < N; ++j) f[j] = F(params.limiter, growth * dV(p.x[j])) / params.D;
  const std::vector<double> M = cumulative_integral(f, h, i0); // mu = e^{-M}
  const std::vector<double> I = exp_weighted_integral(std::vector<double>(N, 1.0), M, h, i0);
  const double c1 = C1_fn(t);
  p.U.resize(N);
  p.mu.resize(N);
  for (std::size_t j = 0; j < N; ++j) {
    if (M[j] > kExponentGuard) throw OverflowGuard("X4 integrating factor overflows");
    p.mu[j] = std::exp(-M[j]);
    p.U[j] = U_ref * std::exp(M[j]) + (c1 / params.D) * I[j];
  }
  return p;
}

/// The V closure needs e^{-lambda t} U(x, t) to be independent of t. Reports
/// the largest pointwise spread over the sampled times.
struct X4Compatibility {
  double spread = 0.0;
  double worst_x = 0.0;
  std::vector<std::vector<double>> closure_rhs; // per sampled t
};

inline X4Compatibility x4_compatibility(const ModelParams& params, double lambda,
                                        const std::function<double(double)>& dV,
                                        const std::function<double(double)>& C1_fn, double U_ref, double x0,
                                        const Grid1D& grid, const std::vector<double>& t_samples) {
  X4Compatibility c;
  for (double t : t_samples) {
    X4Profile p = case4_X4_quadrature(params, lambda, dV, C1_fn, U_ref, x0, grid, t);
    for (auto& u : p.U) u *= std::exp(-lambda * t);
    c.closure_rhs.push_back(std::move(p.U));
  }
  if (c.closure_rhs.empty()) return c;
  for (std::size_t j = 0; j < grid.nodes(); ++j) {
    double lo = c.closure_rhs[0][j], hi = lo;
    for (const auto& r : c.closure_rhs) {
      lo = std::min(lo, r[j]);
      hi = std::max(hi, r[j]);
    }
    if (hi - lo > c.spread) {
      c.spread = hi - lo;
      c.worst_x = grid.x(j);
    }
  }
  return c;
}

} // namespace flks
