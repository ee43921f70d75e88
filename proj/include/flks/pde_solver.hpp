#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "flks/core.hpp"
#include "flks/errors.hpp"

namespace flks {

enum class BoundaryCondition { Neumann, Periodic, Dirichlet };

inline std::string_view to_string(BoundaryCondition b) {
  switch (b) {
  case BoundaryCondition::Neumann: return "neumann";
  case BoundaryCondition::Periodic: return "periodic";
  case BoundaryCondition::Dirichlet: return "dirichlet";
  }
  return "?";
}

struct SolverConfig {
  Grid1D grid;
  BoundaryCondition bc = BoundaryCondition::Neumann;
  double cfl_safety = 0.4;
  double t_end = 1.0;
  std::size_t output_stride = 100; // steps between frames when frame_dt is 0
  double frame_dt = 0.0;           // > 0: frames at exact multiples of frame_dt
  std::size_t max_steps = 50'000'000;
  // optional forcing added to the u and v equations (manufactured solutions)
  std::function<double(double, double)> source_u{};
  std::function<double(double, double)> source_v{};
  // Dirichlet: boundary values (x, t) for u and v at x_lo and x_hi
  std::function<double(double, double)> boundary_u{};
  std::function<double(double, double)> boundary_v{};

  void validate() const {
    grid.validate();
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw ValidationError("solver.cfl", "must lie in (0, 1]");
    if (!std::isfinite(t_end)) throw ValidationError("solver.t_end", "must be finite");
    if (output_stride == 0) throw ValidationError("solver.output_stride", "must be >= 1");
    if (!(frame_dt >= 0.0)) throw ValidationError("solver.frame_dt", "must be >= 0");
    if (bc == BoundaryCondition::Dirichlet && (!boundary_u || !boundary_v))
      throw ValidationError("solver.bc", "dirichlet needs boundary values for u and v");
  }
};

struct Trajectory {
  std::vector<FieldPair> frames;
  std::vector<double> mass;     // int u dx per frame
  std::vector<double> min_u;    // per frame
  std::vector<double> max_flux; // max |F(v_x)| over faces per frame
  std::size_t steps = 0;
  double t_final = 0.0;
};

namespace detail {

struct Rhs {
  const ModelParams& p;
  const SolverConfig& c;
  double h;
  std::size_t N; // stored nodes (n + 1)

  bool periodic() const { return c.bc == BoundaryCondition::Periodic; }

  // u value at node i with periodic wrap or even reflection at Neumann walls
  double at(const std::vector<double>& f, long i) const {
    const long n = static_cast<long>(N) - 1;
    if (periodic()) {
      i %= n;
      if (i < 0) i += n;
      return f[static_cast<std::size_t>(i)];
    }
    if (i < 0) i = -i;
    if (i > n) i = 2 * n - i;
    return f[static_cast<std::size_t>(i)];
  }

  // Face value between nodes k and k+1, third-order upwind-biased
  // (kappa = 1/3) interpolation from the side the velocity comes from.
  double face_u(const std::vector<double>& u, long k, double vel) const {
    if (vel >= 0.0) return (-at(u, k - 1) + 5.0 * at(u, k) + 2.0 * at(u, k + 1)) / 6.0;
    return (2.0 * at(u, k) + 5.0 * at(u, k + 1) - at(u, k + 2)) / 6.0;
  }

  double max_face_flux(const std::vector<double>& v) const {
    double m = 0.0;
    for (std::size_t k = 0; k + 1 < N; ++k) m = std::max(m, std::abs(F(p.limiter, (v[k + 1] - v[k]) / h)));
    return m;
  }

  void operator()(const std::vector<double>& u, const std::vector<double>& v, double t, std::vector<double>& du,
                  std::vector<double>& dv) const {
    const std::size_t faces = N - 1;
    std::vector<double> J(faces);
    for (std::size_t k = 0; k < faces; ++k) {
      const double vel = F(p.limiter, (v[k + 1] - v[k]) / h);
      J[k] = p.D * (u[k + 1] - u[k]) / h - face_u(u, static_cast<long>(k), vel) * vel;
    }
    const double kappa = evaluate_decay(p.decay, t);
    du.assign(N, 0.0);
    dv.assign(N, 0.0);
    const double h2 = h * h;
    if (periodic()) {
      const std::size_t n = N - 1;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t l = (i + n - 1) % n;
        du[i] = (J[i] - J[l]) / h;
        dv[i] = (at(v, static_cast<long>(i) + 1) - 2.0 * v[i] + at(v, static_cast<long>(i) - 1)) / h2 -
                kappa * v[i] + u[i];
      }
      du[n] = du[0];
      dv[n] = dv[0];
    } else {
      const std::size_t n = N - 1;
      du[0] = J[0] / (0.5 * h);
      du[n] = -J[n - 1] / (0.5 * h);
      for (std::size_t i = 1; i < n; ++i) du[i] = (J[i] - J[i - 1]) / h;
      for (std::size_t i = 0; i <= n; ++i)
        dv[i] = (at(v, static_cast<long>(i) + 1) - 2.0 * v[i] + at(v, static_cast<long>(i) - 1)) / h2 -
                kappa * v[i] + u[i];
    }
    for (std::size_t i = 0; i < N; ++i) {
      const double x = c.grid.x(i);
      if (c.source_u) du[i] += c.source_u(x, t);
      if (c.source_v) dv[i] += c.source_v(x, t);
      dv[i] /= p.tau;
    }
    if (c.bc == BoundaryCondition::Dirichlet) du[0] = du[N - 1] = dv[0] = dv[N - 1] = 0.0;
  }

  void pin(FieldPair& s, double t) const {
    if (c.bc != BoundaryCondition::Dirichlet) return;
    s.u.front() = c.boundary_u(c.grid.x_lo, t);
    s.u.back() = c.boundary_u(c.grid.x_hi, t);
    s.v.front() = c.boundary_v(c.grid.x_lo, t);
    s.v.back() = c.boundary_v(c.grid.x_hi, t);
  }
};

} // namespace detail

/// Largest admissible step at time t:
/// cfl * min(dx^2 / (2 max(D, 1/tau)), dx s0_eff / V_max, tau / |kappa(t)|).
inline double stable_dt(const ModelParams& p, const SolverConfig& c, double t) {
  const double h = c.grid.dx();
  double dt = h * h / (2.0 * std::max(p.D, 1.0 / p.tau));
  if (p.limiter.vmax > 0.0) dt = std::min(dt, h * gradient_scale(p.limiter) / p.limiter.vmax);
  const double k = std::abs(evaluate_decay(p.decay, t));
  if (k > 0.0) dt = std::min(dt, p.tau / k);
  return c.cfl_safety * dt;
}

/// Trapezoid-rule mass, the quantity the discretization conserves under
/// Neumann and periodic conditions.
inline double total_mass(const std::vector<double>& u, const Grid1D& g, BoundaryCondition bc) {
  const double h = g.dx();
  double m = 0.0;
  const std::size_t n = u.size() - 1;
  if (bc == BoundaryCondition::Periodic) {
    for (std::size_t i = 0; i < n; ++i) m += h * u[i];
    return m;
  }
  for (std::size_t i = 0; i <= n; ++i) m += (i == 0 || i == n ? 0.5 * h : h) * u[i];
  return m;
}

/// One SSP-RK3 step of u_t = D u_xx - (u F(v_x))_x, tau v_t = v_xx - kappa(t) v + u.
inline FieldPair step(const FieldPair& s, const ModelParams& p, const SolverConfig& c, double dt) {
  if (!s.matches(c.grid)) throw GridMismatch("state does not match the solver grid");
  if (!s.valid()) throw InvalidState("state is not finite", s.t);
  if (!(dt > 0.0)) throw StepSizeError("dt must be > 0");
  const double bound = stable_dt(p, c, s.t);
  if (dt > bound * (1.0 + 1e-12))
    throw CFLViolation("dt=" + std::to_string(dt) + " exceeds the stability bound " + std::to_string(bound));
  detail::Rhs rhs{p, c, c.grid.dx(), c.grid.nodes()};
  const std::size_t N = c.grid.nodes();
  std::vector<double> du, dv;
  FieldPair s1(c.grid, s.t), s2(c.grid, s.t), out(c.grid, s.t + dt);

  rhs(s.u, s.v, s.t, du, dv);
  for (std::size_t i = 0; i < N; ++i) {
    s1.u[i] = s.u[i] + dt * du[i];
    s1.v[i] = s.v[i] + dt * dv[i];
  }
  rhs.pin(s1, s.t + dt);
  rhs(s1.u, s1.v, s.t + dt, du, dv);
  for (std::size_t i = 0; i < N; ++i) {
    s2.u[i] = 0.75 * s.u[i] + 0.25 * (s1.u[i] + dt * du[i]);
    s2.v[i] = 0.75 * s.v[i] + 0.25 * (s1.v[i] + dt * dv[i]);
  }
  rhs.pin(s2, s.t + 0.5 * dt);
  rhs(s2.u, s2.v, s.t + 0.5 * dt, du, dv);
  for (std::size_t i = 0; i < N; ++i) {
    out.u[i] = s.u[i] / 3.0 + 2.0 / 3.0 * (s2.u[i] + dt * du[i]);
    out.v[i] = s.v[i] / 3.0 + 2.0 / 3.0 * (s2.v[i] + dt * dv[i]);
  }
  rhs.pin(out, out.t);
  if (!out.valid()) throw InvalidState("solver produced a non-finite value", out.t);
  return out;
}

/// Advances to t_end with the adaptive stable step and records frames.
inline Trajectory run(const FieldPair& initial, const ModelParams& p, const SolverConfig& c) {
  p.validate();
  c.validate();
  if (!initial.matches(c.grid)) throw GridMismatch("initial state does not match the solver grid");
  if (!initial.valid()) throw InvalidState("initial state is not finite", initial.t);
  Trajectory tr;
  detail::Rhs probe{p, c, c.grid.dx(), c.grid.nodes()};
  auto record = [&](const FieldPair& s) {
    tr.frames.push_back(s);
    tr.mass.push_back(total_mass(s.u, c.grid, c.bc));
    tr.min_u.push_back(*std::min_element(s.u.begin(), s.u.end()));
    tr.max_flux.push_back(probe.max_face_flux(s.v));
  };
  FieldPair s = initial;
  if (c.bc == BoundaryCondition::Periodic) {
    s.u.back() = s.u.front();
    s.v.back() = s.v.front();
  }
  record(s);
  std::size_t next_frame = 1;
  const double t0 = s.t;
  auto frame_time = [&](std::size_t k) { return t0 + static_cast<double>(k) * c.frame_dt; };
  while (s.t < c.t_end) {
    if (tr.steps >= c.max_steps) throw InvalidState("step budget exhausted", s.t);
    double dt = stable_dt(p, c, s.t);
    // compare landing points in floating point so a step never rounds onto a
    // target and leaves a zero-length remainder; the clock is snapped after
    bool last = s.t + dt >= c.t_end;
    if (last) dt = std::min(dt, c.t_end - s.t);
    bool hits_frame = false;
    if (c.frame_dt > 0.0) {
      const double tf = frame_time(next_frame);
      if (s.t + dt >= tf) {
        dt = std::min(dt, tf - s.t);
        hits_frame = true;
        if (tf < c.t_end) last = false;
      }
    }
    try {
      s = step(s, p, c, dt);
    } catch (const InvalidState&) {
      throw;
    } catch (const Error& e) {
      throw InvalidState(std::string(e.what()) + " at t=" + std::to_string(s.t), s.t);
    }
    ++tr.steps;
    if (hits_frame) s.t = frame_time(next_frame); // remove round-off drift in the clock
    if (last) s.t = c.t_end;
    if (hits_frame) {
      ++next_frame;
      record(s);
    } else if (c.frame_dt == 0.0 && tr.steps % c.output_stride == 0) {
      record(s);
    }
  }
  if (tr.frames.back().t != s.t) record(s);
  tr.t_final = s.t;
  return tr;
}

/// Fixed-step integration without frames; used by convergence studies.
inline FieldPair run_fixed(FieldPair s, const ModelParams& p, const SolverConfig& c, double dt, std::size_t steps) {
  for (std::size_t k = 0; k < steps; ++k) s = step(s, p, c, dt);
  return s;
}

} // namespace flks
