#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "flks/core.hpp"
#include "flks/describe.hpp"
#include "flks/errors.hpp"
#include "flks/exact_solutions.hpp"
#include "flks/lie_toolkit.hpp"
#include "flks/pde_solver.hpp"

namespace flks {

struct ResidualReport {
  double sup_norm = 0.0;
  double l2_norm = 0.0; // root mean square over all sampled (x, t, component)
  double sup_u = 0.0;
  double sup_v = 0.0;
  Grid1D grid;
  std::vector<double> t_samples;
  double worst_x = 0.0;
  double worst_t = 0.0;
  std::size_t points = 0;
};

namespace detail {

inline double d1_4(double fm2, double fm1, double fp1, double fp2, double h) {
  return (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
}
inline double d2_4(double fm2, double fm1, double f0, double fp1, double fp2, double h) {
  return (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
}

struct ResidualAccumulator {
  ResidualReport r;
  double sum_sq = 0.0;

  void add(double Ru, double Rv, double x, double t) {
    const double a = std::max(std::abs(Ru), std::abs(Rv));
    if (a > r.sup_norm || r.points == 0) {
      r.worst_x = x;
      r.worst_t = t;
    }
    r.sup_norm = std::max(r.sup_norm, a);
    r.sup_u = std::max(r.sup_u, std::abs(Ru));
    r.sup_v = std::max(r.sup_v, std::abs(Rv));
    sum_sq += Ru * Ru + Rv * Rv;
    ++r.points;
  }
  ResidualReport finish() {
    r.l2_norm = r.points ? std::sqrt(sum_sq / (2.0 * static_cast<double>(r.points))) : 0.0;
    return r;
  }
};

} // namespace detail

/// Residuals R_u = u_t - D u_xx + (u F(v_x))_x and R_v = tau v_t - v_xx + kappa v - u
/// of a closed-form solution, by 4th-order central differences in x (step dx)
/// and t (step dt_fd) at every grid node and sample time.
inline ResidualReport pde_residual(const ExactSolution& sol, const ModelParams& p, const Grid1D& grid,
                                   const std::vector<double>& t_samples, double dt_fd = 1e-3) {
  detail::ResidualAccumulator acc;
  acc.r.grid = grid;
  acc.r.t_samples = t_samples;
  const double h = grid.dx();
  auto flux = [&](double x, double t) {
    const double vx = detail::d1_4(sol.eval_v(x - 2 * h, t), sol.eval_v(x - h, t), sol.eval_v(x + h, t),
                                   sol.eval_v(x + 2 * h, t), h);
    return sol.eval_u(x, t) * F(p.limiter, vx);
  };
  for (double t : t_samples) {
    const double kappa = evaluate_decay(p.decay, t);
    for (std::size_t i = 0; i < grid.nodes(); ++i) {
      const double x = grid.x(i);
      auto u = [&](double xx, double tt) { return sol.eval_u(xx, tt); };
      auto v = [&](double xx, double tt) { return sol.eval_v(xx, tt); };
      const double k = dt_fd;
      const double ut = detail::d1_4(u(x, t - 2 * k), u(x, t - k), u(x, t + k), u(x, t + 2 * k), k);
      const double vt = detail::d1_4(v(x, t - 2 * k), v(x, t - k), v(x, t + k), v(x, t + 2 * k), k);
      const double uxx = detail::d2_4(u(x - 2 * h, t), u(x - h, t), u(x, t), u(x + h, t), u(x + 2 * h, t), h);
      const double vxx = detail::d2_4(v(x - 2 * h, t), v(x - h, t), v(x, t), v(x + h, t), v(x + 2 * h, t), h);
      const double qx = detail::d1_4(flux(x - 2 * h, t), flux(x - h, t), flux(x + h, t), flux(x + 2 * h, t), h);
      const double Ru = ut - p.D * uxx + qx;
      const double Rv = p.tau * vt - vxx + kappa * v(x, t) - u(x, t);
      if (!std::isfinite(Ru) || !std::isfinite(Rv)) throw EvaluationError("non-finite residual at x=" + std::to_string(x));
      acc.add(Ru, Rv, x, t);
    }
  }
  return acc.finish();
}

/// Residual of sampled frames at uniform time spacing. Time derivatives use
/// frames k-2..k+2; spatial stencils reach four nodes, so non-periodic data is
/// evaluated on nodes 4..n-4 and nodes whose stencil holds a non-finite value
/// are skipped.
inline ResidualReport pde_residual(const std::vector<FieldPair>& frames, const ModelParams& p, const Grid1D& grid,
                                   BoundaryCondition bc = BoundaryCondition::Neumann) {
  if (frames.size() < 5) throw DomainError("need at least five frames for time differences");
  for (const auto& f : frames)
    if (!f.matches(grid)) throw GridMismatch("frame does not match the residual grid");
  const double dt = frames[1].t - frames[0].t;
  if (!(dt > 0.0)) throw DomainError("frames must advance in time");
  for (std::size_t k = 1; k < frames.size(); ++k)
    if (std::abs(frames[k].t - frames[k - 1].t - dt) > 1e-9 * dt)
      throw DomainError("frames must be uniformly spaced in time");

  const double h = grid.dx();
  const bool periodic = bc == BoundaryCondition::Periodic;
  const long n = grid.n;
  auto idx = [&](long i) -> long {
    if (!periodic) return i;
    i %= n;
    return i < 0 ? i + n : i;
  };
  detail::ResidualAccumulator acc;
  acc.r.grid = grid;
  const long lo = periodic ? 0 : 4, hi = periodic ? n - 1 : n - 4;
  std::vector<double> q(grid.nodes());
  for (std::size_t k = 2; k + 2 < frames.size(); ++k) {
    const FieldPair& f = frames[k];
    const double t = f.t;
    acc.r.t_samples.push_back(t);
    const double kappa = evaluate_decay(p.decay, t);
    auto U = [&](long i) { return f.u[static_cast<std::size_t>(idx(i))]; };
    auto V = [&](long i) { return f.v[static_cast<std::size_t>(idx(i))]; };
    auto flux = [&](long j) {
      return U(j) * F(p.limiter, detail::d1_4(V(j - 2), V(j - 1), V(j + 1), V(j + 2), h));
    };
    for (long i = lo; i <= hi; ++i) {
      const std::size_t s = static_cast<std::size_t>(idx(i));
      auto tu = [&](std::size_t m) { return frames[m].u[s]; };
      auto tv = [&](std::size_t m) { return frames[m].v[s]; };
      const double ut = detail::d1_4(tu(k - 2), tu(k - 1), tu(k + 1), tu(k + 2), dt);
      const double vt = detail::d1_4(tv(k - 2), tv(k - 1), tv(k + 1), tv(k + 2), dt);
      const double uxx = detail::d2_4(U(i - 2), U(i - 1), U(i), U(i + 1), U(i + 2), h);
      const double vxx = detail::d2_4(V(i - 2), V(i - 1), V(i), V(i + 1), V(i + 2), h);
      const double qx = detail::d1_4(flux(i - 2), flux(i - 1), flux(i + 1), flux(i + 2), h);
      const double Ru = ut - p.D * uxx + qx;
      const double Rv = p.tau * vt - vxx + kappa * V(i) - U(i);
      if (!std::isfinite(Ru) || !std::isfinite(Rv)) continue;
      acc.add(Ru, Rv, grid.x(s), t);
    }
  }
  if (acc.r.points == 0) throw DomainError("no residual point had a complete stencil");
  return acc.finish();
}

inline json describe(const ResidualReport& r) {
  return {{"sup_norm", r.sup_norm}, {"l2_norm", r.l2_norm}, {"sup_u", r.sup_u}, {"sup_v", r.sup_v},
          {"grid", describe(r.grid)}, {"t_samples", r.t_samples}, {"worst_x", r.worst_x},
          {"worst_t", r.worst_t}, {"points", r.points}};
}

// ------------------------------------------------------------ comparisons

struct Difference {
  double sup_u = 0.0, sup_v = 0.0;
  double l2_u = 0.0, l2_v = 0.0;   // root mean square
  double rel_u = 0.0, rel_v = 0.0; // sup difference over sup |b|
  double sup() const { return std::max(sup_u, sup_v); }
  double rel() const { return std::max(rel_u, rel_v); }
};

inline Difference compare(const FieldPair& a, const FieldPair& b) {
  if (a.u.size() != b.u.size() || a.v.size() != b.v.size() || a.u.size() != a.v.size())
    throw GridMismatch("compared fields have different sizes");
  Difference d;
  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < a.u.size(); ++i) {
    const double eu = std::abs(a.u[i] - b.u[i]), ev = std::abs(a.v[i] - b.v[i]);
    d.sup_u = std::max(d.sup_u, eu);
    d.sup_v = std::max(d.sup_v, ev);
    d.l2_u += eu * eu;
    d.l2_v += ev * ev;
    mu = std::max(mu, std::abs(b.u[i]));
    mv = std::max(mv, std::abs(b.v[i]));
  }
  const double n = static_cast<double>(std::max<std::size_t>(a.u.size(), 1));
  d.l2_u = std::sqrt(d.l2_u / n);
  d.l2_v = std::sqrt(d.l2_v / n);
  d.rel_u = mu > 0.0 ? d.sup_u / mu : d.sup_u;
  d.rel_v = mv > 0.0 ? d.sup_v / mv : d.sup_v;
  return d;
}

inline FieldPair sample(const ExactSolution& sol, const Grid1D& grid, double t) {
  FieldPair f(grid, t);
  for (std::size_t i = 0; i < grid.nodes(); ++i) {
    f.u[i] = sol.eval_u(grid.x(i), t);
    f.v[i] = sol.eval_v(grid.x(i), t);
  }
  return f;
}

/// Injection of a fine-grid field onto a coarse grid whose nodes it contains.
inline FieldPair restrict_to(const FieldPair& fine, const Grid1D& fine_grid, const Grid1D& coarse) {
  if (!fine.matches(fine_grid) || fine_grid.x_lo != coarse.x_lo || fine_grid.x_hi != coarse.x_hi ||
      fine_grid.n % coarse.n != 0)
    throw GridMismatch("coarse grid nodes are not a subset of the fine grid");
  const std::size_t r = static_cast<std::size_t>(fine_grid.n / coarse.n);
  FieldPair c(coarse, fine.t);
  for (std::size_t i = 0; i < coarse.nodes(); ++i) {
    c.u[i] = fine.u[i * r];
    c.v[i] = fine.v[i * r];
  }
  return c;
}

// ------------------------------------------------------------ convergence

struct OrderFit {
  double order = 0.0;
  double intercept = 0.0; // log error at dx = 1
  double r_squared = 0.0;
};

/// Least-squares slope of log(error) against log(dx).
inline OrderFit convergence_order(const std::vector<std::pair<double, double>>& series) {
  if (series.size() < 3) throw DomainError("need at least three (dx, error) points");
  for (const auto& [dx, e] : series) {
    if (!(dx > 0.0) || !(e > 0.0)) throw DomainError("dx and error must be > 0");
    if (e < 1e-14) throw DegenerateFit("error " + std::to_string(e) + " is at the round-off floor");
  }
  const double n = static_cast<double>(series.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& [dx, e] : series) {
    const double x = std::log(dx), y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
  if (!(vx > 0.0)) throw DegenerateFit("dx values must differ");
  OrderFit f;
  f.order = cxy / vx;
  f.intercept = (sy - f.order * sx) / n;
  f.r_squared = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
  return f;
}

// ------------------------------------------------------------ invariance

struct InvarianceReport {
  Generator generator;
  double eps = 0.0;
  ResidualReport baseline;
  ResidualReport transformed;
  double ratio = 0.0; // transformed sup over baseline sup
  bool passed = false; // ratio <= 2
  std::string convention;
};

namespace detail {

inline long whole_steps(double eps, double step, const char* what) {
  const double m = std::round(eps / step);
  if (std::abs(m * step - eps) > 1e-9 * step)
    throw DomainError(std::string("eps must be a whole number of ") + what);
  return static_cast<long>(m);
}

} // namespace detail

/// Applies the finite transform of a catalog generator to sampled frames and
/// compares the residual of the transformed fields with the untransformed one.
///   X1: x -> x + eps (periodic data; eps a multiple of dx)
///   X2: t -> t + eps (eps a multiple of the frame spacing)
///   X4: t -> t + eps, v -> exp(-lambda eps) v
inline InvarianceReport group_invariance_check(Generator g, const std::vector<FieldPair>& frames,
                                               const ModelParams& p, const Grid1D& grid, BoundaryCondition bc,
                                               double eps) {
  InvarianceReport rep;
  rep.generator = g;
  rep.eps = eps;
  if (g == Generator::X3)
    throw UnsupportedGenerator("the dilation rescales the grid; use the self-similar reduction instead");
  if (frames.size() < 5) throw DomainError("need at least five frames");
  std::vector<FieldPair> base = frames, moved;
  if (g == Generator::X1) {
    if (bc != BoundaryCondition::Periodic) throw DomainError("space translation check needs periodic data");
    const long m = detail::whole_steps(eps, grid.dx(), "grid cells");
    const long n = grid.n;
    rep.convention = "u(x,t) -> u(x+eps,t), v(x,t) -> v(x+eps,t)";
    for (const auto& f : frames) {
      FieldPair s(grid, f.t);
      for (long i = 0; i <= n; ++i) {
        const long j = ((i + m) % n + n) % n;
        s.u[static_cast<std::size_t>(i)] = f.u[static_cast<std::size_t>(j)];
        s.v[static_cast<std::size_t>(i)] = f.v[static_cast<std::size_t>(j)];
      }
      moved.push_back(std::move(s));
    }
  } else {
    const double dt = frames[1].t - frames[0].t;
    const long m = detail::whole_steps(eps, dt, "frame intervals");
    if (m < 0 || static_cast<std::size_t>(m) + 5 > frames.size())
      throw DomainError("time shift leaves fewer than five frames");
    double scale = 1.0;
    rep.convention = "u(x,t) -> u(x,t+eps), v(x,t) -> v(x,t+eps)";
    if (g == Generator::X4) {
      const auto* e = std::get_if<ExponentialDecay>(&p.decay);
      const double lambda = e ? e->lambda : 0.0;
      scale = std::exp(-lambda * eps);
      rep.convention = "u(x,t) -> u(x,t+eps), v(x,t) -> exp(-lambda eps) v(x,t+eps); v e^{lambda t} invariant";
    }
    const std::size_t keep = frames.size() - static_cast<std::size_t>(m);
    base.assign(frames.begin(), frames.begin() + static_cast<long>(keep));
    for (std::size_t k = 0; k < keep; ++k) {
      FieldPair s = frames[k + static_cast<std::size_t>(m)];
      s.t = frames[k].t;
      for (double& v : s.v) v *= scale;
      moved.push_back(std::move(s));
    }
  }
  rep.baseline = pde_residual(base, p, grid, bc);
  rep.transformed = pde_residual(moved, p, grid, bc);
  rep.ratio = rep.baseline.sup_norm > 0.0 ? rep.transformed.sup_norm / rep.baseline.sup_norm
                                          : (rep.transformed.sup_norm > 0.0 ? INFINITY : 1.0);
  rep.passed = rep.ratio <= 2.0;
  return rep;
}

/// Catalog lookup for a vector field; lambda is taken from an exponential law.
inline Generator identify_generator(const lie::VectorField& f, const ModelParams& p) {
  if (f == lie::x1()) return Generator::X1;
  if (f == lie::x2()) return Generator::X2;
  if (f == lie::x3()) return Generator::X3;
  if (const auto* e = std::get_if<ExponentialDecay>(&p.decay)) {
    // compare numerically: lambda is a double in the model
    const lie::NumericField n = lie::to_numeric(f);
    if (n[lie::T] == lie::Poly<double>(1.0) && n[lie::X].is_zero() && n[lie::U].is_zero() &&
        n[lie::V] == lie::Poly<double>(lie::v_m, -e->lambda))
      return Generator::X4;
  }
  throw UnsupportedGenerator("field " + lie::to_string(f) + " is not in the checked catalog");
}

inline InvarianceReport group_invariance_check(const lie::VectorField& f, const std::vector<FieldPair>& frames,
                                               const ModelParams& p, const Grid1D& grid, BoundaryCondition bc,
                                               double eps) {
  return group_invariance_check(identify_generator(f, p), frames, p, grid, bc, eps);
}

inline json describe(const InvarianceReport& r) {
  return {{"generator", std::string(to_string(r.generator))}, {"eps", r.eps},
          {"baseline", describe(r.baseline)}, {"transformed", describe(r.transformed)},
          {"ratio", r.ratio}, {"passed", r.passed}, {"convention", r.convention}};
}

} // namespace flks
