#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <variant>

#include "flks/core.hpp"

namespace flks {

using json = nlohmann::json;

inline json describe(const DecayLaw& law) {
  return std::visit(
      [](const auto& d) -> json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ConstantDecay>) {
          return {{"kind", "constant"}, {"kappa0", d.kappa0}};
        } else if constexpr (std::is_same_v<T, PowerLawDecay>) {
          return {{"kind", "power_law"}, {"mu", d.mu}};
        } else if constexpr (std::is_same_v<T, ExponentialDecay>) {
          return {{"kind", "exponential"}, {"kappa0", d.kappa0}, {"lambda", d.lambda}};
        } else {
          json s = json::array();
          for (const auto& [t, k] : d.samples) s.push_back({t, k});
          return {{"kind", "tabulated"}, {"samples", s}};
        }
      },
      law);
}

inline json describe(const FluxLimiter& l) {
  json j{{"kind", std::string(limiter_name(l.kind))}, {"vmax", l.vmax}};
  if (l.kind == FluxLimiter::Kind::Tanh || l.kind == FluxLimiter::Kind::WeberFechnerLog) j["s0"] = l.s0;
  if (l.kind == FluxLimiter::Kind::TanhLog) j["a"] = l.a;
  return j;
}

inline json describe(const ModelParams& p) {
  return {{"D", p.D}, {"tau", p.tau}, {"limiter", describe(p.limiter)}, {"decay", describe(p.decay)}};
}

inline json describe(const Grid1D& g) { return {{"x_lo", g.x_lo}, {"x_hi", g.x_hi}, {"n", g.n}}; }

} // namespace flks
