#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "flks/errors.hpp"

namespace flks {

struct QuadratureResult {
  double value = 0.0;
  double err_estimate = 0.0;
  std::size_t evaluations = 0;
};

namespace detail {

template <class Fn>
struct Simpson {
  Fn& f;
  int max_depth;
  std::size_t evals = 0;
  double err = 0.0;

  double eval(double x) {
    ++evals;
    const double y = f(x);
    if (!std::isfinite(y)) throw EvaluationError("integrand not finite at x=" + std::to_string(x));
    return y;
  }

  double recurse(double a, double fa, double m, double fm, double b, double fb, double whole, double tol,
                 int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = eval(lm);
    const double frm = eval(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double both = left + right;
    const double delta = both - whole;
    // second clause: the difference has reached round-off level
    if (std::abs(delta) <= 15.0 * tol ||
        std::abs(delta) <= 64.0 * std::numeric_limits<double>::epsilon() * std::abs(both)) {
      err += std::abs(delta) / 15.0;
      return both + delta / 15.0;
    }
    if (depth >= max_depth)
      throw MaxDepthExceeded("adaptive Simpson exceeded " + std::to_string(max_depth) + " levels near x=" +
                             std::to_string(m));
    return recurse(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1) +
           recurse(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1);
  }
};

} // namespace detail

/// Adaptive Simpson with Richardson correction. lo > hi flips the sign.
template <class Fn>
QuadratureResult integrate_adaptive(Fn&& f, double lo, double hi, double tol = 1e-10, int max_depth = 60) {
  if (!(tol > 0.0)) throw DomainError("integrate_adaptive: tol must be > 0");
  if (lo == hi) return {};
  double sign = 1.0;
  if (lo > hi) {
    std::swap(lo, hi);
    sign = -1.0;
  }
  detail::Simpson<std::remove_reference_t<Fn>> s{f, max_depth};
  const double m = 0.5 * (lo + hi);
  const double fa = s.eval(lo), fm = s.eval(m), fb = s.eval(hi);
  const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
  const double v = s.recurse(lo, fa, m, fm, hi, fb, whole, tol, 1);
  return {sign * v, s.err, s.evals};
}

// ------------------------------------------------ linear first-order ODE

/// y' + a(t) y = b(t), y(t0) = y0.
struct LinearFirstOrderProblem {
  std::function<double(double)> a{};
  std::function<double(double)> b{};
  double t0 = 0.0;
  double y0 = 0.0;
  // Optional closed form of A(t) = int_{t0}^{t} a; avoids nested quadrature.
  std::function<double(double)> a_integral{};
  // a and b are constant: evaluate them once at t0 and use the closed form.
  bool constant = false;
};

inline constexpr double kExponentGuard = 700.0;

/// y(t) = e^{-A(t)} y0 + int_{t0}^{t} e^{-(A(t)-A(s))} b(s) ds. The exponent
/// difference is formed before exponentiating so large A never overflows.
inline double solve_linear_first_order(const LinearFirstOrderProblem& p, double t, double tol = 1e-12) {
  if (p.constant) {
    const double a = p.a(p.t0), b = p.b(p.t0);
    const double dt = t - p.t0;
    if (std::abs(a * dt) > kExponentGuard) throw OverflowGuard("integrating-factor exponent exceeds 700");
    if (a == 0.0) return p.y0 + b * dt;
    return p.y0 * std::exp(-a * dt) - (b / a) * std::expm1(-a * dt);
  }
  auto A = [&](double s) -> double {
    if (p.a_integral) return p.a_integral(s);
    return integrate_adaptive(p.a, p.t0, s, 1e-2 * tol).value;
  };
  const double At = A(t);
  if (!std::isfinite(At) || std::abs(At) > kExponentGuard)
    throw OverflowGuard("integrating-factor exponent " + std::to_string(At) + " exceeds +-700");
  auto integrand = [&](double s) { return std::exp(A(s) - At) * p.b(s); };
  const double forced = integrate_adaptive(integrand, p.t0, t, tol).value;
  return std::exp(-At) * p.y0 + forced;
}

inline std::vector<double> solve_linear_first_order(const LinearFirstOrderProblem& p,
                                                    const std::vector<double>& t_eval, double tol = 1e-12) {
  std::vector<double> out;
  out.reserve(t_eval.size());
  for (double t : t_eval) out.push_back(solve_linear_first_order(p, t, tol));
  return out;
}

// ------------------------------------------------------ exponential integral

namespace detail {

inline double ei_series(double x) {
  double term = 1.0, sum = 0.0;
  for (int k = 1; k < 1000; ++k) {
    term *= x / k;
    const double add = term / k;
    sum += add;
    if (std::abs(add) <= 1e-17 * std::abs(sum)) break;
  }
  return std::numbers::egamma + std::log(std::abs(x)) + sum;
}

// e^{-x} Ei(x) ~ 1/x * sum k!/x^k, truncated at the smallest term.
inline double ei_asymptotic_scaled(double x) {
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double next = term * k / x;
    if (std::abs(next) >= std::abs(term) || std::abs(next) < 1e-18 * sum) break;
    term = next;
    sum += term;
  }
  return sum / x;
}

// e^{z} E1(z), z > 1, by the modified Lentz continued fraction.
inline double e1_continued_fraction_scaled(double z) {
  constexpr double tiny = 1e-300;
  double b = z + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h;
}

} // namespace detail

/// Principal-value exponential integral. Positive arguments use the power
/// series up to 40 and the asymptotic series beyond; negative arguments use
/// the series for |x| <= 1 and -E1(|x|) by continued fraction beyond.
inline double exp_integral_Ei(double x) {
  if (x == 0.0) throw DomainError("Ei is singular at x = 0");
  if (!std::isfinite(x)) throw DomainError("Ei argument not finite");
  if (x > 709.0) throw OverflowGuard("Ei(x) overflows for x > 709");
  if (x > 0.0) return x <= 40.0 ? detail::ei_series(x) : std::exp(x) * detail::ei_asymptotic_scaled(x);
  if (x >= -1.0) return detail::ei_series(x);
  return -std::exp(x) * detail::e1_continued_fraction_scaled(-x);
}

/// e^{-x} Ei(x), finite for every nonzero finite x.
inline double exp_integral_Ei_scaled(double x) {
  if (x == 0.0) throw DomainError("Ei is singular at x = 0");
  if (!std::isfinite(x)) throw DomainError("Ei argument not finite");
  if (x > 40.0) return detail::ei_asymptotic_scaled(x);
  if (x >= -1.0) return std::exp(-x) * detail::ei_series(x);
  return -detail::e1_continued_fraction_scaled(-x);
}

// ---------------------------------------------------------------- Picard

struct PicardOptions {
  double damping = 0.5;
  double tol = 1e-8;
  int max_iter = 200;
};

struct PicardResult {
  std::vector<double> profile;
  std::vector<double> history; // sup-norm update per iteration
  int iterations = 0;
};

namespace detail {
inline bool diverging(const std::vector<double>& h) {
  const std::size_t n = h.size();
  if (n < 6) return false;
  for (std::size_t k = n - 5; k < n; ++k)
    if (!(h[k] > h[k - 1])) return false;
  return h[n - 1] >= 10.0 * h[n - 6];
}
} // namespace detail

/// Damped fixed-point iteration y <- (1-w) y + w map(y). Returns the first
/// map(y) whose update has sup norm below tol.
template <class Map>
PicardResult picard_iterate(Map&& map, std::vector<double> y, const PicardOptions& opt = {}) {
  if (!(opt.damping > 0.0 && opt.damping <= 1.0)) throw DomainError("picard damping must lie in (0, 1]");
  PicardResult res;
  for (int k = 1; k <= opt.max_iter; ++k) {
    std::vector<double> next = map(y);
    if (next.size() != y.size()) throw GridMismatch("picard map changed the profile length");
    double r = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = std::abs(next[i] - y[i]);
      r = std::isfinite(d) ? std::max(r, d) : std::numeric_limits<double>::infinity();
    }
    res.history.push_back(r);
    res.iterations = k;
    if (!std::isfinite(r))
      throw DivergenceDetected("picard iterate became non-finite at iteration " + std::to_string(k),
                               res.history, y);
    if (r < opt.tol) {
      res.profile = std::move(next);
      return res;
    }
    if (detail::diverging(res.history))
      throw DivergenceDetected("picard residual grew 10x over 5 consecutive iterations", res.history, next);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = (1.0 - opt.damping) * y[i] + opt.damping * next[i];
  }
  throw NoConvergence("picard did not reach tol " + std::to_string(opt.tol) + " in " +
                          std::to_string(opt.max_iter) + " iterations",
                      res.history, y);
}

// ------------------------------------------- uniform-grid cumulative rules

namespace detail {
// 4-point rule for the cell [x_j, x_{j+1}] on n nodes.
inline void cell_stencil(std::size_t j, std::size_t n, std::array<std::size_t, 4>& idx, std::array<double, 4>& w) {
  if (j >= 1 && j + 2 < n) {
    idx = {j - 1, j, j + 1, j + 2};
    w = {-1.0 / 24, 13.0 / 24, 13.0 / 24, -1.0 / 24};
  } else if (j == 0) {
    idx = {0, 1, 2, 3};
    w = {9.0 / 24, 19.0 / 24, -5.0 / 24, 1.0 / 24};
  } else {
    idx = {j - 2, j - 1, j, j + 1};
    w = {1.0 / 24, -5.0 / 24, 19.0 / 24, 9.0 / 24};
  }
}
} // namespace detail

/// I_j = int_{x_anchor}^{x_j} e^{phi_j - phi(s)} f(s) ds on a uniform grid
/// with spacing h, fourth order. phi is sampled at the nodes and only enters
/// through differences, so large exponents do not overflow.
inline std::vector<double> exp_weighted_integral(const std::vector<double>& f, const std::vector<double>& phi,
                                                 double h, std::size_t anchor) {
  const std::size_t n = f.size();
  if (n < 4) throw DomainError("cumulative rule needs at least 4 nodes");
  if (phi.size() != n) throw GridMismatch("weight exponent and integrand differ in length");
  if (anchor >= n) throw DomainError("anchor outside the grid");
  std::vector<double> I(n, 0.0);
  std::array<std::size_t, 4> idx;
  std::array<double, 4> w;
  for (std::size_t j = anchor; j + 1 < n; ++j) {
    detail::cell_stencil(j, n, idx, w);
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += w[k] * std::exp(phi[j + 1] - phi[idx[k]]) * f[idx[k]];
    I[j + 1] = std::exp(phi[j + 1] - phi[j]) * I[j] + h * s;
  }
  for (std::size_t j = anchor; j-- > 0;) {
    detail::cell_stencil(j, n, idx, w);
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += w[k] * std::exp(phi[j] - phi[idx[k]]) * f[idx[k]];
    I[j] = std::exp(phi[j] - phi[j + 1]) * I[j + 1] - h * s;
  }
  return I;
}

/// I_j = int_{x_anchor}^{x_j} e^{r (x_j - s)} f(s) ds.
inline std::vector<double> exp_kernel_integral(const std::vector<double>& f, double h, std::size_t anchor,
                                               double r = 0.0) {
  std::vector<double> phi(f.size());
  for (std::size_t j = 0; j < phi.size(); ++j) phi[j] = r * h * static_cast<double>(j);
  return exp_weighted_integral(f, phi, h, anchor);
}

inline std::vector<double> cumulative_integral(const std::vector<double>& f, double h, std::size_t anchor) {
  return exp_kernel_integral(f, h, anchor, 0.0);
}

} // namespace flks
