#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flks/core.hpp"
#include "flks/exact_solutions.hpp"
#include "flks/quadrature.hpp"

namespace flks {

enum class ReducedKind { HomogeneousODE, SteadyStateBVP, TravellingWaveODE, SelfSimilarSystem, CellFreeWaveODE };

inline std::string_view to_string(ReducedKind k) {
  switch (k) {
  case ReducedKind::HomogeneousODE: return "homogeneous";
  case ReducedKind::SteadyStateBVP: return "steady_state";
  case ReducedKind::TravellingWaveODE: return "travelling_wave";
  case ReducedKind::SelfSimilarSystem: return "self_similar";
  case ReducedKind::CellFreeWaveODE: return "cellfree_wave";
  }
  return "?";
}

/// One reduced ODE or boundary-value problem. lo, hi is the time window for
/// the homogeneous system and the spatial / similarity window otherwise.
struct ReducedProblem {
  ReducedKind kind = ReducedKind::HomogeneousODE;
  ModelParams params;
  double alpha = 0.0;  // travelling waves, y = t - alpha x
  double lambda = 0.0; // exponential decay rate for the cell-free wave
  double p = -0.5;     // similarity exponents, u = t^p U, v = t^q V
  double q = 0.5;
  double lo = 0.0;
  double hi = 1.0;
  std::size_t n = 1000;
  // homogeneous: {U0, V0}; travelling wave: {U, U', V, V'} at lo; cell-free: {V, V'}
  std::vector<double> initial;
  // steady state initial guess; empty means uniform
  std::vector<double> U_guess, V_guess;
  // self-similar normalization U(0) and first-integral constant
  double U0 = 1.0;
  double C1 = 0.0;
  PicardOptions picard{0.5, 1e-12, 400};
  double newton_tol = 1e-12;
  int newton_max_iter = 50;

  void validate() const {
    params.validate();
    if (!(hi > lo)) throw ValidationError("reduce.hi", "window must satisfy hi > lo");
    if (n < 1) throw ValidationError("reduce.n", "need at least one step");
    switch (kind) {
    case ReducedKind::HomogeneousODE:
      if (initial.size() != 2) throw ValidationError("reduce.initial", "homogeneous data is {U0, V0}");
      break;
    case ReducedKind::SteadyStateBVP:
      if (n < 8) throw ValidationError("reduce.n", "need at least 8 cells");
      break;
    case ReducedKind::TravellingWaveODE:
      if (alpha == 0.0) throw ValidationError("reduce.alpha", "travelling waves need alpha != 0");
      if (initial.size() != 4) throw ValidationError("reduce.initial", "travelling-wave data is {U, U', V, V'}");
      break;
    case ReducedKind::CellFreeWaveODE:
      if (alpha == 0.0) throw ValidationError("reduce.alpha", "travelling waves need alpha != 0");
      if (initial.size() != 2) throw ValidationError("reduce.initial", "cell-free data is {V, V'}");
      break;
    case ReducedKind::SelfSimilarSystem:
      if (params.limiter.kind != FluxLimiter::Kind::TanhLog)
        throw ValidationError("limiter.kind", "self-similar reduction uses the tanh_log limiter");
      if (p != -0.5 || q != 0.5) throw ValidationError("reduce.p", "similarity exponents are fixed at (-1/2, 1/2)");
      if (lo != 0.0) throw ValidationError("reduce.lo", "self-similar window starts at xi = 0");
      if (n < 16) throw ValidationError("reduce.n", "need at least 16 cells");
      break;
    }
  }
};

/// kappa0 for the autonomous reductions (constant decay, or exponential with
/// lambda = 0).
inline double constant_decay_rate(const DecayLaw& law) {
  if (const auto* c = std::get_if<ConstantDecay>(&law)) return c->kappa0;
  if (const auto* e = std::get_if<ExponentialDecay>(&law); e && e->lambda == 0.0) return e->kappa0;
  throw DomainError("this reduction needs a constant decay rate");
}

// ------------------------------------------------------------- homogeneous

struct HomogeneousProfile {
  std::vector<double> t, U, V;
};

/// RK4 for U' = 0, tau V' = -kappa(t) V + U with fixed step h = (hi - lo)/n.
inline HomogeneousProfile integrate_homogeneous(const ReducedProblem& pr) {
  if (pr.kind != ReducedKind::HomogeneousODE) throw DomainError("expected a homogeneous problem");
  pr.validate();
  const double h = (pr.hi - pr.lo) / static_cast<double>(pr.n);
  if (!(h > 0.0) || !std::isfinite(h)) throw StepSizeError("step size must be > 0");
  const double tau = pr.params.tau;
  const DecayLaw& law = pr.params.decay;
  HomogeneousProfile out;
  out.t.reserve(pr.n + 1);
  const double U = pr.initial[0];
  double V = pr.initial[1];
  auto rhs = [&](double t, double v) { return (-evaluate_decay(law, t) * v + U) / tau; };
  for (std::size_t k = 0; k <= pr.n; ++k) {
    const double t = pr.lo + h * static_cast<double>(k);
    out.t.push_back(t);
    out.U.push_back(U);
    out.V.push_back(V);
    if (k == pr.n) break;
    const double k1 = rhs(t, V), k2 = rhs(t + h / 2, V + h / 2 * k1), k3 = rhs(t + h / 2, V + h / 2 * k2),
                 k4 = rhs(t + h, V + h * k3);
    V += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return out;
}

// ------------------------------------------------------------ steady state

struct SteadyBC {
  enum class Type { Neumann, Dirichlet };
  Type type = Type::Neumann;
  double U_left = 0.0, U_right = 0.0, V_left = 0.0, V_right = 0.0;
  // Neumann: total mass of U; nullopt keeps the mass of the initial guess
  std::optional<double> mass;
};

struct SteadyState {
  std::vector<double> x, U, V;
  double defect = 0.0;
  std::vector<double> history; // defect per Newton iterate
  int iterations = 0;
};

namespace detail {

struct SteadyDiscretization {
  const FluxLimiter& lim;
  double D, kappa0, h;
  std::size_t N; // nodes
  SteadyBC bc;
  double mass = 0.0;

  // residual; when jac is given also the Jacobian triplets
  std::vector<double> residual(const std::vector<double>& z, std::vector<Eigen::Triplet<double>>* jac,
                               double* dropped_row = nullptr) const {
    const std::size_t M = N;
    auto U = [&](std::size_t i) { return z[i]; };
    auto V = [&](std::size_t i) { return z[M + i]; };
    std::vector<double> R(2 * M, 0.0);
    std::vector<double> J(M - 1), dJ_dUl(M - 1), dJ_dUr(M - 1), dJ_dVl(M - 1), dJ_dVr(M - 1);
    for (std::size_t k = 0; k + 1 < M; ++k) {
      const double d = (V(k + 1) - V(k)) / h;
      const double f = F(lim, d), fp = dF(lim, d);
      const double ub = 0.5 * (U(k) + U(k + 1));
      J[k] = D * (U(k + 1) - U(k)) / h - ub * f;
      dJ_dUl[k] = -D / h - 0.5 * f;
      dJ_dUr[k] = D / h - 0.5 * f;
      dJ_dVl[k] = ub * fp / h;
      dJ_dVr[k] = -ub * fp / h;
    }
    auto add = [&](std::size_t r, std::size_t c, double v) {
      if (jac) jac->emplace_back(static_cast<int>(r), static_cast<int>(c), v);
    };
    auto add_face = [&](std::size_t row, std::size_t k, double w) {
      add(row, k, w * dJ_dUl[k]);
      add(row, k + 1, w * dJ_dUr[k]);
      add(row, M + k, w * dJ_dVl[k]);
      add(row, M + k + 1, w * dJ_dVr[k]);
    };
    const bool neumann = bc.type == SteadyBC::Type::Neumann;
    for (std::size_t i = 1; i + 1 < M; ++i) {
      R[i] = (J[i] - J[i - 1]) / h;
      add_face(i, i, 1.0 / h);
      add_face(i, i - 1, -1.0 / h);
    }
    if (neumann) {
      const double r0 = J[0] / (0.5 * h);
      if (dropped_row) *dropped_row = r0;
      double m = 0.0;
      for (std::size_t i = 0; i < M; ++i) {
        const double w = (i == 0 || i + 1 == M) ? 0.5 * h : h;
        m += w * U(i);
        add(0, i, w);
      }
      R[0] = m - mass;
      R[M - 1] = -J[M - 2] / (0.5 * h);
      add_face(M - 1, M - 2, -2.0 / h);
    } else {
      R[0] = U(0) - bc.U_left;
      add(0, 0, 1.0);
      R[M - 1] = U(M - 1) - bc.U_right;
      add(M - 1, M - 1, 1.0);
      if (dropped_row) *dropped_row = 0.0;
    }
    const double h2 = h * h;
    for (std::size_t i = 1; i + 1 < M; ++i) {
      R[M + i] = (V(i + 1) - 2 * V(i) + V(i - 1)) / h2 - kappa0 * V(i) + U(i);
      add(M + i, M + i - 1, 1.0 / h2);
      add(M + i, M + i, -2.0 / h2 - kappa0);
      add(M + i, M + i + 1, 1.0 / h2);
      add(M + i, i, 1.0);
    }
    if (neumann) {
      for (std::size_t e : {std::size_t{0}, M - 1}) {
        const std::size_t nb = e == 0 ? 1 : M - 2;
        R[M + e] = 2 * (V(nb) - V(e)) / h2 - kappa0 * V(e) + U(e);
        add(M + e, M + nb, 2.0 / h2);
        add(M + e, M + e, -2.0 / h2 - kappa0);
        add(M + e, e, 1.0);
      }
    } else {
      R[M] = V(0) - bc.V_left;
      add(M, M, 1.0);
      R[2 * M - 1] = V(M - 1) - bc.V_right;
      add(2 * M - 1, 2 * M - 1, 1.0);
    }
    return R;
  }
};

inline double sup_norm(const std::vector<double>& r) {
  double m = 0.0;
  for (double v : r) m = std::max(m, std::isfinite(v) ? std::abs(v) : std::numeric_limits<double>::infinity());
  return m;
}

} // namespace detail

/// 0 = D U'' - (U F(V'))', 0 = V'' - kappa0 V + U on [lo, hi] by damped Newton.
/// The flux is conservative with face-averaged U; under Neumann conditions
/// the U-equation at the left node is replaced by the mass constraint.
inline SteadyState solve_steady_state(const ReducedProblem& pr, const SteadyBC& bc = {}) {
  if (pr.kind != ReducedKind::SteadyStateBVP) throw DomainError("expected a steady-state problem");
  pr.validate();
  const double kappa0 = constant_decay_rate(pr.params.decay);
  const std::size_t N = pr.n + 1;
  const double h = (pr.hi - pr.lo) / static_cast<double>(pr.n);
  std::vector<double> z(2 * N);
  if (!pr.U_guess.empty() || !pr.V_guess.empty()) {
    if (pr.U_guess.size() != N || pr.V_guess.size() != N)
      throw GridMismatch("steady-state guess must have n + 1 nodes");
    std::copy(pr.U_guess.begin(), pr.U_guess.end(), z.begin());
    std::copy(pr.V_guess.begin(), pr.V_guess.end(), z.begin() + static_cast<long>(N));
  } else {
    const double c = bc.mass ? *bc.mass / (pr.hi - pr.lo) : 1.0;
    std::fill(z.begin(), z.begin() + static_cast<long>(N), c);
    std::fill(z.begin() + static_cast<long>(N), z.end(), kappa0 != 0.0 ? c / kappa0 : 0.0);
  }
  detail::SteadyDiscretization disc{pr.params.limiter, pr.params.D, kappa0, h, N, bc};
  if (bc.type == SteadyBC::Type::Neumann) {
    if (bc.mass) {
      disc.mass = *bc.mass;
    } else {
      double m = 0.0;
      for (std::size_t i = 0; i < N; ++i) m += ((i == 0 || i + 1 == N) ? 0.5 * h : h) * z[i];
      disc.mass = m;
    }
  }

  SteadyState out;
  auto full_defect = [&](const std::vector<double>& R, double dropped) {
    return std::max(detail::sup_norm(R), std::abs(dropped));
  };
  double dropped = 0.0;
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> R = disc.residual(z, &trip, &dropped);
  double defect = full_defect(R, dropped);
  out.history.push_back(defect);
  const int dim = static_cast<int>(2 * N);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (int it = 0; it < pr.newton_max_iter && defect >= pr.newton_tol; ++it) {
    Eigen::SparseMatrix<double> A(dim, dim);
    A.setFromTriplets(trip.begin(), trip.end());
    lu.compute(A);
    if (lu.info() != Eigen::Success)
      throw NoConvergence("steady-state Jacobian is singular", out.history, z);
    Eigen::VectorXd rhs(dim);
    for (int i = 0; i < dim; ++i) rhs[i] = -R[static_cast<std::size_t>(i)];
    const Eigen::VectorXd dz = lu.solve(rhs);
    // backtrack by halves until the defect decreases
    double step = 1.0;
    std::vector<double> trial(z.size());
    double trial_defect = 0.0, trial_dropped = 0.0;
    std::vector<double> trial_R;
    for (int ls = 0; ls < 30; ++ls) {
      for (std::size_t i = 0; i < z.size(); ++i) trial[i] = z[i] + step * dz[static_cast<int>(i)];
      trial_R = disc.residual(trial, nullptr, &trial_dropped);
      trial_defect = full_defect(trial_R, trial_dropped);
      if (trial_defect < defect) break;
      step *= 0.5;
    }
    if (!(trial_defect < defect)) {
      if (defect < 1e3 * pr.newton_tol) break; // round-off floor
      throw NoConvergence("steady-state line search stalled at defect " + std::to_string(defect), out.history, z);
    }
    z = trial;
    trip.clear();
    R = disc.residual(z, &trip, &dropped);
    defect = full_defect(R, dropped);
    out.history.push_back(defect);
    out.iterations = it + 1;
  }
  if (!(defect < pr.newton_tol) && !(defect < 1e3 * pr.newton_tol))
    throw NoConvergence("steady-state Newton did not reach tol " + std::to_string(pr.newton_tol), out.history, z);
  out.defect = defect;
  out.x.resize(N);
  for (std::size_t i = 0; i < N; ++i) out.x[i] = i + 1 == N ? pr.hi : pr.lo + h * static_cast<double>(i);
  out.U.assign(z.begin(), z.begin() + static_cast<long>(N));
  out.V.assign(z.begin() + static_cast<long>(N), z.end());
  return out;
}

// -------------------------------------------------------- travelling wave

struct WaveProfile {
  std::vector<double> y, U, P, V, s; // P = U'
};

namespace detail {
template <std::size_t K, class Rhs>
WaveProfile rk4_wave(const ReducedProblem& pr, std::array<double, K> z, Rhs&& rhs) {
  const double h = (pr.hi - pr.lo) / static_cast<double>(pr.n);
  WaveProfile out;
  auto record = [&](double y, const std::array<double, K>& w) {
    out.y.push_back(y);
    if constexpr (K == 4) {
      out.U.push_back(w[0]);
      out.P.push_back(w[1]);
      out.V.push_back(w[2]);
      out.s.push_back(w[3]);
    } else {
      out.U.push_back(0.0);
      out.P.push_back(0.0);
      out.V.push_back(w[0]);
      out.s.push_back(w[1]);
    }
  };
  auto axpy = [](const std::array<double, K>& a, double c, const std::array<double, K>& b) {
    std::array<double, K> r;
    for (std::size_t i = 0; i < K; ++i) r[i] = a[i] + c * b[i];
    return r;
  };
  for (std::size_t k = 0; k <= pr.n; ++k) {
    const double y = k == pr.n ? pr.hi : pr.lo + h * static_cast<double>(k);
    for (double c : z)
      if (!(std::abs(c) <= 1e12)) throw BlowupDetected("travelling-wave state exceeds 1e12", y);
    record(y, z);
    if (k == pr.n) break;
    const auto k1 = rhs(z), k2 = rhs(axpy(z, h / 2, k1)), k3 = rhs(axpy(z, h / 2, k2)), k4 = rhs(axpy(z, h, k3));
    for (std::size_t i = 0; i < K; ++i) z[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return out;
}
} // namespace detail

/// RK4 on {U, U', V, s = V'} for U' = D a^2 U'' + a (U F(-a s))' and
/// tau V' = a^2 V'' - kappa0 V + U, starting from lo.
inline WaveProfile integrate_travelling_wave(const ReducedProblem& pr) {
  if (pr.kind != ReducedKind::TravellingWaveODE) throw DomainError("expected a travelling-wave problem");
  pr.validate();
  const double k0 = constant_decay_rate(pr.params.decay);
  const double D = pr.params.D, tau = pr.params.tau, al = pr.alpha, a2 = al * al;
  const FluxLimiter& lim = pr.params.limiter;
  std::array<double, 4> z{pr.initial[0], pr.initial[1], pr.initial[2], pr.initial[3]};
  return detail::rk4_wave<4>(pr, z, [&](const std::array<double, 4>& w) {
    const double U = w[0], P = w[1], V = w[2], s = w[3];
    const double ds = (tau * s + k0 * V - U) / a2;
    const double f = F(lim, -al * s), fp = dF(lim, -al * s);
    const double dP = (P - al * P * f + a2 * U * fp * ds) / (D * a2);
    return std::array<double, 4>{P, dP, s, ds};
  });
}

/// u = 0 front: a^2 V'' - tau V' - (kappa0 - tau lambda) V = 0.
inline WaveProfile integrate_cellfree_wave(const ReducedProblem& pr) {
  if (pr.kind != ReducedKind::CellFreeWaveODE) throw DomainError("expected a cell-free wave problem");
  pr.validate();
  double k0 = 0.0;
  if (const auto* e = std::get_if<ExponentialDecay>(&pr.params.decay))
    k0 = e->kappa0;
  else
    k0 = constant_decay_rate(pr.params.decay);
  const double keff = k0 - pr.params.tau * pr.lambda, tau = pr.params.tau, a2 = pr.alpha * pr.alpha;
  std::array<double, 2> z{pr.initial[0], pr.initial[1]};
  return detail::rk4_wave<2>(pr, z, [&](const std::array<double, 2>& w) {
    return std::array<double, 2>{w[1], (tau * w[1] + keff * w[0]) / a2};
  });
}

struct WaveDefect {
  double U_equation = 0.0;
  double V_equation = 0.0;
  double worst_y = 0.0;
};

/// Sup-norm defect of the travelling-wave ODEs on a uniform profile, by
/// fourth-order differences, restricted to [y_lo, y_hi].
inline WaveDefect travelling_wave_defect(const std::vector<double>& y, const std::vector<double>& U,
                                         const std::vector<double>& V, const std::vector<double>& s,
                                         const ModelParams& params, double alpha, double kappa0, double y_lo,
                                         double y_hi) {
  if (y.size() < 5 || U.size() != y.size() || V.size() != y.size() || s.size() != y.size())
    throw GridMismatch("travelling-wave profiles differ in length");
  const double h = y[1] - y[0], D = params.D, tau = params.tau, a2 = alpha * alpha;
  std::vector<double> J(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) J[j] = U[j] * F(params.limiter, -alpha * s[j]);
  auto d1 = [h](const std::vector<double>& f, std::size_t i) {
    return (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]) / (12 * h);
  };
  auto d2 = [h](const std::vector<double>& f, std::size_t i) {
    return (-f[i - 2] + 16 * f[i - 1] - 30 * f[i] + 16 * f[i + 1] - f[i + 2]) / (12 * h * h);
  };
  WaveDefect w;
  double worst = -1.0;
  for (std::size_t j = 2; j + 2 < y.size(); ++j) {
    if (y[j] < y_lo - 1e-9 * h || y[j] > y_hi + 1e-9 * h) continue;
    const double ru = std::abs(d1(U, j) - D * a2 * d2(U, j) - alpha * d1(J, j));
    const double rv = std::abs(tau * d1(V, j) - a2 * d2(V, j) + kappa0 * V[j] - U[j]);
    w.U_equation = std::max(w.U_equation, ru);
    w.V_equation = std::max(w.V_equation, rv);
    if (std::max(ru, rv) > worst) {
      worst = std::max(ru, rv);
      w.worst_y = y[j];
    }
  }
  return w;
}

inline WaveDefect travelling_wave_defect(const TravellingWave& tw, const ModelParams& params, double alpha,
                                         double kappa0, double y_lo, double y_hi) {
  return travelling_wave_defect(tw.y, tw.U, tw.V, tw.s, params, alpha, kappa0, y_lo, y_hi);
}

// ------------------------------------------------------------ self-similar

struct SelfSimilarDefects {
  double U_equation = 0.0;    // D U'' - (U F(S))' + U/2 + xi U'/2
  double V_equation = 0.0;    // V'' - xi V'/2 + V/2 - U
  double S_form = 0.0;        // -tau xi S''/2 - (S'' - mu S + U')
  double pde_consistent = 0.0; // V'' + tau xi V'/2 - (mu + tau/2) V + U
  double S_vs_dV = 0.0;       // |S - V'|
};

struct SelfSimilarProfile {
  std::vector<double> xi, U, V, S;
  std::vector<double> history;
  int iterations = 0;
  SelfSimilarDefects defects;
  double mu = 0.0;
};

namespace detail {

// Fourth-order derivative on a uniform grid, one-sided at both ends.
inline std::vector<double> derivative4(const std::vector<double>& f, double h) {
  const std::size_t n = f.size() - 1;
  std::vector<double> d(f.size());
  for (std::size_t i = 2; i + 2 <= n; ++i) d[i] = (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]) / (12 * h);
  d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h);
  d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h);
  d[n - 1] = (3 * f[n] + 10 * f[n - 1] - 18 * f[n - 2] + 6 * f[n - 3] - f[n - 4]) / (12 * h);
  d[n] = (25 * f[n] - 48 * f[n - 1] + 36 * f[n - 2] - 16 * f[n - 3] + 3 * f[n - 4]) / (12 * h);
  return d;
}

// V'' - xi V'/2 + V/2 = U on [0, xi_max] with V'(0) = 0 and the growing
// Gaussian branch suppressed at xi_max. W = e^{-xi^2/8} V removes the first
// derivative, W'' + (3/4 - xi^2/16) W = e^{-xi^2/8} U, solved by Numerov.
struct SelfSimilarVSolver {
  std::vector<double> xi;
  double h;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;

  SelfSimilarVSolver(const std::vector<double>& grid, double step) : xi(grid), h(step) {
    const std::size_t n = xi.size() - 1;
    const double xm = xi.back(), c = h * h / 12.0;
    std::vector<Eigen::Triplet<double>> t;
    const std::array<double, 5> fwd{-25, 48, -36, 16, -3};
    for (int k = 0; k < 5; ++k) t.emplace_back(0, k, fwd[k] / (12 * h));
    auto q = [&](std::size_t i) { return 0.75 - xi[i] * xi[i] / 16.0; };
    for (std::size_t i = 1; i < n; ++i) {
      const int r = static_cast<int>(i);
      t.emplace_back(r, r - 1, 1.0 + c * q(i - 1));
      t.emplace_back(r, r, -2.0 + 10.0 * c * q(i));
      t.emplace_back(r, r + 1, 1.0 + c * q(i + 1));
    }
    // a V ~ xi tail: W'/W = 1/xi - xi/4
    const std::array<double, 5> bwd{3, -16, 36, -48, 25};
    for (int k = 0; k < 5; ++k) {
      double v = bwd[k] / (12 * h);
      if (k == 4) v -= 1.0 / xm - xm / 4.0;
      t.emplace_back(static_cast<int>(n), static_cast<int>(n) - 4 + k, v);
    }
    Eigen::SparseMatrix<double> A(static_cast<int>(n + 1), static_cast<int>(n + 1));
    A.setFromTriplets(t.begin(), t.end());
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw DomainError("self-similar V operator is singular");
  }

  void solve(const std::vector<double>& U, std::vector<double>& V, std::vector<double>& S) {
    const std::size_t n = xi.size() - 1;
    const double c = h * h / 12.0;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<int>(n + 1));
    std::vector<double> r(n + 1);
    for (std::size_t i = 0; i <= n; ++i) r[i] = U[i] * std::exp(-xi[i] * xi[i] / 8.0);
    for (std::size_t i = 1; i < n; ++i) b[static_cast<int>(i)] = c * (r[i - 1] + 10 * r[i] + r[i + 1]);
    const Eigen::VectorXd w = lu.solve(b);
    std::vector<double> W(w.data(), w.data() + w.size());
    const std::vector<double> dW = derivative4(W, h);
    V.resize(n + 1);
    S.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      const double g = std::exp(xi[i] * xi[i] / 8.0);
      V[i] = g * W[i];
      S[i] = g * (dW[i] + xi[i] * W[i] / 4.0);
    }
  }
};

} // namespace detail

/// Residuals of the similarity ODEs at nodes 2..n-2 of the half line.
inline SelfSimilarDefects self_similar_defects(const std::vector<double>& xi, const std::vector<double>& U,
                                               const std::vector<double>& V, const std::vector<double>& S,
                                               const ModelParams& params, double mu) {
  const double h = xi[1] - xi[0], D = params.D, tau = params.tau;
  std::vector<double> J(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) J[i] = U[i] * F(params.limiter, S[i]);
  auto d1 = [h](const std::vector<double>& f, std::size_t i) {
    return (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]) / (12 * h);
  };
  auto d2 = [h](const std::vector<double>& f, std::size_t i) {
    return (-f[i - 2] + 16 * f[i - 1] - 30 * f[i] + 16 * f[i + 1] - f[i + 2]) / (12 * h * h);
  };
  SelfSimilarDefects d;
  for (std::size_t i = 2; i + 2 < xi.size(); ++i) {
    const double x = xi[i];
    d.U_equation = std::max(d.U_equation, std::abs(D * d2(U, i) - d1(J, i) + U[i] / 2 + x * d1(U, i) / 2));
    d.V_equation = std::max(d.V_equation, std::abs(d2(V, i) - x * d1(V, i) / 2 + V[i] / 2 - U[i]));
    d.S_form = std::max(d.S_form, std::abs(-tau * x * d2(S, i) / 2 - (d2(S, i) - mu * S[i] + d1(U, i))));
    d.pde_consistent =
        std::max(d.pde_consistent, std::abs(d2(V, i) + tau * x * d1(V, i) / 2 - (mu + tau / 2) * V[i] + U[i]));
    d.S_vs_dV = std::max(d.S_vs_dV, std::abs(S[i] - d1(V, i)));
  }
  return d;
}

/// Self-similar profiles xi = x / sqrt(t), u = t^{-1/2} U, v = t^{1/2} V on
/// [0, xi_max] with even symmetry at 0. Picard alternates the V solve with the
/// U quadrature of the first integral D U' - U F(S) + xi U / 2 = C1, U(0) = U0.
/// mu (kappa = mu/t) only enters the diagnostic defects.
inline SelfSimilarProfile solve_self_similar(const ReducedProblem& pr, double mu) {
  if (pr.kind != ReducedKind::SelfSimilarSystem) throw DomainError("expected a self-similar problem");
  pr.validate();
  const std::size_t n = pr.n;
  const double h = pr.hi / static_cast<double>(n), D = pr.params.D;
  SelfSimilarProfile out;
  out.mu = mu;
  out.xi.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) out.xi[i] = i == n ? pr.hi : h * static_cast<double>(i);
  const auto& xi = out.xi;
  detail::SelfSimilarVSolver vs(xi, h);
  std::vector<double> V, S;
  const std::vector<double> ones(n + 1, 1.0);
  auto update_U = [&](const std::vector<double>& U) {
    vs.solve(U, V, S);
    std::vector<double> g(n + 1);
    for (std::size_t i = 0; i <= n; ++i) g[i] = (F(pr.params.limiter, S[i]) - xi[i] / 2) / D;
    const std::vector<double> G = cumulative_integral(g, h, 0);
    std::vector<double> Un(n + 1);
    std::vector<double> I;
    if (pr.C1 != 0.0) I = exp_weighted_integral(ones, G, h, 0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (G[i] > kExponentGuard) throw OverflowGuard("self-similar integrating factor overflows");
      Un[i] = pr.U0 * std::exp(G[i]) + (pr.C1 != 0.0 ? pr.C1 / D * I[i] : 0.0);
    }
    return Un;
  };
  std::vector<double> U(n + 1);
  for (std::size_t i = 0; i <= n; ++i) U[i] = pr.U0 * std::exp(-xi[i] * xi[i] / (4 * D));
  PicardResult res = picard_iterate(update_U, U, pr.picard);
  out.U = std::move(res.profile);
  out.history = std::move(res.history);
  out.iterations = res.iterations;
  vs.solve(out.U, out.V, out.S);
  out.defects = self_similar_defects(xi, out.U, out.V, out.S, pr.params, mu);
  return out;
}

/// True when the last k entries of a residual history decrease strictly.
inline bool tail_monotone(const std::vector<double>& history, std::size_t k = 10) {
  if (history.size() < 2) return true;
  const std::size_t start = history.size() > k ? history.size() - k : 1;
  for (std::size_t i = std::max<std::size_t>(start, 1); i < history.size(); ++i)
    if (!(history[i] < history[i - 1])) return false;
  return true;
}

} // namespace flks
