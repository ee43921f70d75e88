#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "flks/errors.hpp"

namespace flks {

/// Flux-limiter catalog. F(s) = f(s)*s is the chemotactic velocity for a
/// chemical gradient s.
struct FluxLimiter {
  enum class Kind { AlgebraicSqrt, Tanh, WeberFechnerLog, TanhLog };

  Kind kind = Kind::Tanh;
  double vmax = 1.0;
  double s0 = 1.0; // Tanh, WeberFechnerLog
  double a = 1.0;  // TanhLog

  static FluxLimiter algebraic_sqrt(double vmax) { return make(Kind::AlgebraicSqrt, vmax, 1.0, 1.0); }
  static FluxLimiter tanh(double vmax, double s0) { return make(Kind::Tanh, vmax, s0, 1.0); }
  static FluxLimiter weber_fechner_log(double vmax, double s0) {
    return make(Kind::WeberFechnerLog, vmax, s0, 1.0);
  }
  static FluxLimiter tanh_log(double vmax, double a) { return make(Kind::TanhLog, vmax, 1.0, a); }

  // vmax == 0 is accepted and switches the chemotactic flux off.
  void validate() const {
    if (!(vmax >= 0.0) || !std::isfinite(vmax))
      throw ValidationError("limiter.vmax", "must be finite and >= 0");
    if (!(s0 > 0.0) || !std::isfinite(s0))
      throw ValidationError("limiter.s0", "must be finite and > 0");
    if (!(a > 0.0) || !std::isfinite(a))
      throw ValidationError("limiter.a", "must be finite and > 0");
  }

private:
  static FluxLimiter make(Kind k, double vmax, double s0, double a) {
    FluxLimiter l;
    l.kind = k;
    l.vmax = vmax;
    l.s0 = s0;
    l.a = a;
    l.validate();
    return l;
  }
};

inline double F(const FluxLimiter& l, double s) {
  switch (l.kind) {
  case FluxLimiter::Kind::AlgebraicSqrt:
    // second form keeps |F| <= vmax when 1 + s*s rounds to s*s
    if (std::abs(s) <= 1.0) return l.vmax * s / std::sqrt(1.0 + s * s);
    return l.vmax * std::copysign(1.0, s) / std::sqrt(1.0 + 1.0 / (s * s));
  case FluxLimiter::Kind::Tanh:
    return l.vmax * std::tanh(s / l.s0);
  case FluxLimiter::Kind::WeberFechnerLog:
    return l.vmax * std::log1p((s / l.s0) * (s / l.s0));
  case FluxLimiter::Kind::TanhLog:
    return l.vmax * std::tanh(std::log1p(l.a * s * s));
  }
  return 0.0;
}

inline double dF(const FluxLimiter& l, double s) {
  switch (l.kind) {
  case FluxLimiter::Kind::AlgebraicSqrt: {
    const double q = 1.0 + s * s;
    return l.vmax / (q * std::sqrt(q));
  }
  case FluxLimiter::Kind::Tanh: {
    const double c = std::cosh(s / l.s0);
    return l.vmax / (l.s0 * c * c);
  }
  case FluxLimiter::Kind::WeberFechnerLog:
    return l.vmax * 2.0 * s / (l.s0 * l.s0 + s * s);
  case FluxLimiter::Kind::TanhLog: {
    const double q = 1.0 + l.a * s * s;
    const double c = std::cosh(std::log1p(l.a * s * s));
    return l.vmax * 2.0 * l.a * s / (q * c * c);
  }
  }
  return 0.0;
}

/// True when |F| <= vmax holds on the whole real line.
inline bool is_bounded(const FluxLimiter& l) {
  return l.kind != FluxLimiter::Kind::WeberFechnerLog;
}

inline bool is_odd(const FluxLimiter& l) {
  return l.kind == FluxLimiter::Kind::AlgebraicSqrt || l.kind == FluxLimiter::Kind::Tanh;
}

/// Gradient scale entering the advective time-step bound.
inline double gradient_scale(const FluxLimiter& l) {
  switch (l.kind) {
  case FluxLimiter::Kind::Tanh:
  case FluxLimiter::Kind::WeberFechnerLog:
    return l.s0;
  default:
    return 1.0;
  }
}

inline std::string_view limiter_name(FluxLimiter::Kind k) {
  switch (k) {
  case FluxLimiter::Kind::AlgebraicSqrt: return "algebraic_sqrt";
  case FluxLimiter::Kind::Tanh: return "tanh";
  case FluxLimiter::Kind::WeberFechnerLog: return "weber_fechner_log";
  case FluxLimiter::Kind::TanhLog: return "tanh_log";
  }
  return "?";
}

inline FluxLimiter::Kind limiter_kind_from_name(std::string_view name) {
  for (auto k : {FluxLimiter::Kind::AlgebraicSqrt, FluxLimiter::Kind::Tanh,
                 FluxLimiter::Kind::WeberFechnerLog, FluxLimiter::Kind::TanhLog})
    if (limiter_name(k) == name) return k;
  throw ValidationError("limiter.kind", "unknown limiter '" + std::string(name) + "'");
}

} // namespace flks
