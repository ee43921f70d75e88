#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "flks/errors.hpp"
#include "flks/limiters.hpp"

namespace flks {

// ---------------------------------------------------------------- decay laws

struct ConstantDecay {
  double kappa0;
};
struct PowerLawDecay {
  double mu;
};
struct ExponentialDecay {
  double kappa0;
  double lambda;
};
/// Piecewise-linear kappa through strictly increasing (t, kappa) samples.
struct TabulatedDecay {
  std::vector<std::pair<double, double>> samples;
};

using DecayLaw = std::variant<ConstantDecay, PowerLawDecay, ExponentialDecay, TabulatedDecay>;

inline void validate(const DecayLaw& law) {
  auto finite = [](double x, const char* field) {
    if (!std::isfinite(x)) throw ValidationError(field, "must be finite");
  };
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ConstantDecay>) {
          finite(d.kappa0, "decay.kappa0");
        } else if constexpr (std::is_same_v<T, PowerLawDecay>) {
          finite(d.mu, "decay.mu");
        } else if constexpr (std::is_same_v<T, ExponentialDecay>) {
          finite(d.kappa0, "decay.kappa0");
          finite(d.lambda, "decay.lambda");
        } else {
          if (d.samples.size() < 2) throw ValidationError("decay.samples", "need at least two samples");
          for (std::size_t i = 0; i < d.samples.size(); ++i) {
            finite(d.samples[i].first, "decay.samples");
            finite(d.samples[i].second, "decay.samples");
            if (i > 0 && !(d.samples[i].first > d.samples[i - 1].first))
              throw ValidationError("decay.samples", "t values must be strictly increasing");
          }
        }
      },
      law);
}

namespace detail {
inline std::size_t tab_segment(const TabulatedDecay& d, double t) {
  const auto& s = d.samples;
  if (!(t >= s.front().first && t <= s.back().first))
    throw DomainError("tabulated decay evaluated outside [" + std::to_string(s.front().first) + ", " +
                      std::to_string(s.back().first) + "] at t=" + std::to_string(t));
  auto it = std::upper_bound(s.begin(), s.end(), t,
                             [](double x, const std::pair<double, double>& p) { return x < p.first; });
  std::size_t j = static_cast<std::size_t>(it - s.begin());
  return std::clamp<std::size_t>(j, 1, s.size() - 1) - 1;
}
} // namespace detail

inline double evaluate_decay(const DecayLaw& law, double t) {
  return std::visit(
      [t](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ConstantDecay>) {
          return d.kappa0;
        } else if constexpr (std::is_same_v<T, PowerLawDecay>) {
          if (!(t > 0.0)) throw DomainError("power-law decay requires t > 0, got t=" + std::to_string(t));
          return d.mu / t;
        } else if constexpr (std::is_same_v<T, ExponentialDecay>) {
          return d.kappa0 * std::exp(d.lambda * t);
        } else {
          std::size_t j = detail::tab_segment(d, t);
          const auto [t0, k0] = d.samples[j];
          const auto [t1, k1] = d.samples[j + 1];
          const double w = (t - t0) / (t1 - t0);
          return (1.0 - w) * k0 + w * k1;
        }
      },
      law);
}

/// kappa'(t); undefined for tabulated laws.
inline double decay_derivative(const DecayLaw& law, double t) {
  return std::visit(
      [t](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ConstantDecay>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, PowerLawDecay>) {
          if (!(t > 0.0)) throw DomainError("power-law decay requires t > 0");
          return -d.mu / (t * t);
        } else if constexpr (std::is_same_v<T, ExponentialDecay>) {
          return d.kappa0 * d.lambda * std::exp(d.lambda * t);
        } else {
          throw DomainError("tabulated decay has no derivative");
        }
      },
      law);
}

/// Exact integral of kappa over [a, b] (b < a gives the negated value).
inline double decay_integral(const DecayLaw& law, double a, double b) {
  return std::visit(
      [a, b](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ConstantDecay>) {
          return d.kappa0 * (b - a);
        } else if constexpr (std::is_same_v<T, PowerLawDecay>) {
          if (!(a > 0.0) || !(b > 0.0)) throw DomainError("power-law decay requires t > 0");
          return d.mu * std::log(b / a);
        } else if constexpr (std::is_same_v<T, ExponentialDecay>) {
          if (d.lambda == 0.0) return d.kappa0 * (b - a);
          // expm1 keeps accuracy for small lambda*(b-a)
          return d.kappa0 * std::exp(d.lambda * a) * std::expm1(d.lambda * (b - a)) / d.lambda;
        } else {
          if (b < a) return -decay_integral(DecayLaw{d}, b, a);
          std::size_t ja = detail::tab_segment(d, a);
          std::size_t jb = detail::tab_segment(d, b);
          auto value = [&](double t, std::size_t j) {
            const auto [t0, k0] = d.samples[j];
            const auto [t1, k1] = d.samples[j + 1];
            return k0 + (k1 - k0) * (t - t0) / (t1 - t0);
          };
          if (ja == jb) return 0.5 * (value(a, ja) + value(b, ja)) * (b - a);
          double sum = 0.5 * (value(a, ja) + d.samples[ja + 1].second) * (d.samples[ja + 1].first - a);
          for (std::size_t j = ja + 1; j < jb; ++j)
            sum += 0.5 * (d.samples[j].second + d.samples[j + 1].second) *
                   (d.samples[j + 1].first - d.samples[j].first);
          sum += 0.5 * (d.samples[jb].second + value(b, jb)) * (b - d.samples[jb].first);
          return sum;
        }
      },
      law);
}

// -------------------------------------------------------- classification

enum class CaseTag { I_Arbitrary, II_Constant, III_PowerLaw, IV_Exponential };
enum class Generator { X1, X2, X3, X4 };

inline std::string_view to_string(CaseTag c) {
  switch (c) {
  case CaseTag::I_Arbitrary: return "I_Arbitrary";
  case CaseTag::II_Constant: return "II_Constant";
  case CaseTag::III_PowerLaw: return "III_PowerLaw";
  case CaseTag::IV_Exponential: return "IV_Exponential";
  }
  return "?";
}

inline std::string_view to_string(Generator g) {
  switch (g) {
  case Generator::X1: return "X1";
  case Generator::X2: return "X2";
  case Generator::X3: return "X3";
  case Generator::X4: return "X4";
  }
  return "?";
}

struct Classification {
  CaseTag tag;
  std::vector<Generator> generators;
};

/// Depends only on the variant; values are validated but never inspected.
inline Classification classify(const DecayLaw& law) {
  validate(law);
  switch (law.index()) {
  case 0: return {CaseTag::II_Constant, {Generator::X1, Generator::X2}};
  case 1: return {CaseTag::III_PowerLaw, {Generator::X1, Generator::X3}};
  case 2: return {CaseTag::IV_Exponential, {Generator::X1, Generator::X4}};
  default: return {CaseTag::I_Arbitrary, {Generator::X1}};
  }
}

inline bool tag_consistent(CaseTag tag, const DecayLaw& law) {
  return classify(law).tag == tag;
}

// ------------------------------------------------------------ model, grid

struct ModelParams {
  double D = 1.0;
  double tau = 1.0;
  FluxLimiter limiter{};
  DecayLaw decay = ConstantDecay{0.5};

  void validate() const {
    if (!(D > 0.0) || !std::isfinite(D)) throw ValidationError("model.D", "must be finite and > 0");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("model.tau", "must be finite and > 0");
    limiter.validate();
    flks::validate(decay);
  }
};

struct Grid1D {
  double x_lo = 0.0;
  double x_hi = 1.0;
  int n = 8; // cells; nodes = n + 1

  Grid1D() = default;
  Grid1D(double lo, double hi, int cells) : x_lo(lo), x_hi(hi), n(cells) { validate(); }

  void validate() const {
    if (!(x_lo < x_hi)) throw ValidationError("grid.x_lo", "x_lo must be < x_hi");
    if (n < 8) throw ValidationError("grid.n", "need at least 8 cells");
  }
  double dx() const { return (x_hi - x_lo) / n; }
  std::size_t nodes() const { return static_cast<std::size_t>(n) + 1; }
  double x(std::size_t i) const {
    return i == static_cast<std::size_t>(n) ? x_hi : x_lo + static_cast<double>(i) * dx();
  }
  std::vector<double> coordinates() const {
    std::vector<double> out(nodes());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x(i);
    return out;
  }
  bool operator==(const Grid1D& o) const { return x_lo == o.x_lo && x_hi == o.x_hi && n == o.n; }
};

struct FieldPair {
  std::vector<double> u;
  std::vector<double> v;
  double t = 0.0;

  FieldPair() = default;
  FieldPair(const Grid1D& g, double t0) : u(g.nodes(), 0.0), v(g.nodes(), 0.0), t(t0) {}

  bool valid() const {
    if (u.size() != v.size()) return false;
    auto fin = [](double x) { return std::isfinite(x); };
    return std::isfinite(t) && std::all_of(u.begin(), u.end(), fin) && std::all_of(v.begin(), v.end(), fin);
  }
  bool matches(const Grid1D& g) const { return u.size() == g.nodes() && v.size() == g.nodes(); }
};

} // namespace flks
