#ifndef RSHARE_CONTRACT_STATE_HPP
#define RSHARE_CONTRACT_STATE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rshare/market_model.hpp"
#include "rshare/piecewise.hpp"

namespace rshare {

/// Invalid scenario input. field() is the dotted path of the offending entry,
/// e.g. "agents.A.gamma".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Party { A, B };

inline const char* party_name(Party p) { return p == Party::A ? "A" : "B"; }

enum class Mode {
  main,      // both agents exponential
  appendix,  // A risk-neutral, incremental cash-flow
};

struct AgentParams {
  double gamma = 1.0;
  bool risk_neutral = false;
  double nu = 0.0;                  // initial endowment
  double loss_rate = 1.0;           // L in (0, 1]
  PiecewiseConstant funding_spread; // s = R - r
  PiecewiseConstant margin_spread;  // s^m
  std::vector<double> premium_shift{0.0};  // b = Lambda^i - Lambda, per factor
};

enum class HedgeMode { delta_hedge, naked, custom };

/// What a custom hedge rule may look at on a grid node.
struct NodeState {
  double t = 0.0;
  double r = 0.0;
  double v = 0.0;
  double delta_A = 0.0;
  double delta_B = 0.0;
  double B = 1.0;  // money account
  double K = 1.0;
};

/// Writes phi (one entry per Brownian factor) for the given node.
using CustomHedge = std::function<void(const NodeState&, std::span<double>)>;

struct AgentHedge {
  HedgeMode mode = HedgeMode::delta_hedge;
  CustomHedge phi;  // used only in custom mode
};

struct HedgePolicy {
  AgentHedge A;
  AgentHedge B;
};

/// Constant-vector custom hedge.
inline CustomHedge constant_hedge(std::vector<double> phi) {
  return [phi = std::move(phi)](const NodeState&, std::span<double> out) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = j < phi.size() ? phi[j] : 0.0;
  };
}

/// Hedging error phi^i. The clean-price delta loads on factor 0 only.
/// A: phi = pi - Delta^A, so naked gives -Delta^A. B: phi = pi + Delta^B.
inline void hedge_phi(Party who, const AgentHedge& h, const NodeState& s, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  switch (h.mode) {
    case HedgeMode::delta_hedge:
      return;
    case HedgeMode::naked:
      if (!out.empty()) out[0] = who == Party::A ? -s.delta_A : s.delta_B;
      return;
    case HedgeMode::custom:
      if (!h.phi) throw std::invalid_argument("custom hedge without a phi function");
      h.phi(s, out);
      return;
  }
}

enum class Dividend { unit_bond_paid_by_A };

struct CollateralDomain {
  bool singleton = false;  // false: all of R
  double delta0 = 0.0;
};

struct ContractSpec {
  double maturity = 1.0;
  Dividend dividend = Dividend::unit_bond_paid_by_A;
  double lambda = 1.0;
  PiecewiseConstant delta_E;  // endowed residual, appendix mode only
  CollateralDomain domain;
};

struct Scenario {
  Mode mode = Mode::main;
  MarketModel market;
  AgentParams A;
  AgentParams B;
  ContractSpec contract;
  HedgePolicy hedge;

  const AgentParams& agent(Party p) const { return p == Party::A ? A : B; }
  double gamma_ratio() const { return B.gamma / A.gamma; }
};

// ---------------------------------------------------------------------------
// Breach amount and utilities
// ---------------------------------------------------------------------------

inline double pos(double x) { return x > 0.0 ? x : 0.0; }
inline double neg(double x) { return x < 0.0 ? -x : 0.0; }  // x = pos(x) - neg(x)

/// Theta at the first default. With delta_E = 0 this is L_A delta+ when A
/// defaults and -L_B delta- when B defaults.
inline double breach_amount(double delta, Party defaulter, double L_A, double L_B, double delta_E = 0.0) {
  if (defaulter == Party::A) return L_A * (pos(delta + delta_E) - pos(delta_E));
  return -L_B * (neg(delta + delta_E) - neg(delta_E));
}

enum class UtilityKind { exponential, linear };

inline constexpr double kExponentClamp = 700.0;

struct UtilityValue {
  double value = 0.0;
  double derivative = 0.0;
  bool clamped = false;
};

/// U(x) = -exp(-gamma x) or U(x) = x.
inline UtilityValue utility(UtilityKind kind, double gamma, double x) {
  if (kind == UtilityKind::linear) return {x, 1.0, false};
  double z = -gamma * x;
  bool clamped = false;
  if (z > kExponentClamp) {
    z = kExponentClamp;
    clamped = true;
  } else if (z < -kExponentClamp) {
    z = -kExponentClamp;
    clamped = true;
  }
  const double e = std::exp(z);
  return {-e, gamma * e, clamped};
}

inline UtilityKind utility_kind(const Scenario& sc, Party p) {
  return (p == Party::A && sc.mode == Mode::appendix) ? UtilityKind::linear : UtilityKind::exponential;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {
inline void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}
inline bool identically_zero(const PiecewiseConstant& f) { return f.is_zero(); }
}  // namespace detail

inline void validate(const Scenario& sc) {
  using detail::require;
  const auto& m = sc.market;
  require(!m.risk_premium.empty(), "market.risk_premium", "needs at least one factor");
  for (double x : m.risk_premium) require(std::isfinite(x), "market.risk_premium", "must be finite");
  if (m.rate.is_cir()) {
    const auto& c = std::get<CirRate>(m.rate.spec);
    require(c.k > 0.0, "market.rate.k", "must be > 0");
    require(c.theta > 0.0, "market.rate.theta", "must be > 0");
    require(c.rho > 0.0, "market.rate.rho", "must be > 0");
    require(c.r0 > 0.0, "market.rate.r0", "must be > 0");
  } else {
    require(std::get<ConstantRate>(m.rate.spec).level >= 0.0, "market.rate.r", "must be >= 0");
  }
  require(m.intensities.h_A.min_value() >= 0.0, "market.intensities.h_A", "must be >= 0");
  require(m.intensities.h_B.min_value() >= 0.0, "market.intensities.h_B", "must be >= 0");

  const auto& k = sc.contract;
  require(k.maturity > 0.0 && std::isfinite(k.maturity), "contract.maturity", "must be > 0");
  require(k.lambda > 0.0 && std::isfinite(k.lambda), "contract.lambda", "must be > 0");
  if (k.domain.singleton)
    require(std::isfinite(k.domain.delta0), "contract.collateral_domain.delta0", "must be finite");

  for (Party p : {Party::A, Party::B}) {
    const auto& a = sc.agent(p);
    const std::string base = std::string("agents.") + party_name(p);
    const bool linear = utility_kind(sc, p) == UtilityKind::linear;
    if (!linear) require(a.gamma > 0.0 && std::isfinite(a.gamma), base + ".gamma", "must be > 0");
    require(a.loss_rate > 0.0 && a.loss_rate <= 1.0, base + ".L", "must lie in (0, 1]");
    require(a.premium_shift.size() == m.risk_premium.size(), base + ".b",
            "must have one entry per risk-premium factor");
    for (double x : a.premium_shift) require(std::isfinite(x), base + ".b", "must be finite");
    if (sc.hedge.A.mode == HedgeMode::custom && !sc.hedge.A.phi)
      throw ConfigError("hedge.A.phi", "custom hedge needs phi");
    if (sc.hedge.B.mode == HedgeMode::custom && !sc.hedge.B.phi)
      throw ConfigError("hedge.B.phi", "custom hedge needs phi");
  }

  if (sc.mode == Mode::main) {
    require(!sc.A.risk_neutral, "agents.A.risk_neutral", "main mode needs two risk-averse agents");
    require(!sc.B.risk_neutral, "agents.B.risk_neutral", "main mode needs two risk-averse agents");
    if (!k.domain.singleton) {
      require(detail::identically_zero(sc.A.margin_spread), "agents.A.s_m",
              "main mode needs s_m == 0 unless the collateral domain is a singleton");
      require(detail::identically_zero(sc.B.margin_spread), "agents.B.s_m",
              "main mode needs s_m == 0 unless the collateral domain is a singleton");
    }
    require(k.delta_E.is_zero(), "contract.delta_E", "only used in appendix mode");
  } else {
    require(sc.A.risk_neutral, "agents.A.risk_neutral", "appendix mode needs a risk-neutral A");
    require(!sc.B.risk_neutral, "agents.B.risk_neutral", "appendix mode needs a risk-averse B");
    require(detail::identically_zero(sc.B.margin_spread), "agents.B.s_m", "appendix mode needs s_m == 0 for B");
    require(sc.A.margin_spread.min_value() >= 0.0, "agents.A.s_m", "must be >= 0");
  }
  // h0 = h_A + h_B - h_delta must stay nonnegative for G to be a survival probability
  const auto& h = m.intensities;
  std::vector<double> cuts = h.h_A.times();
  for (const auto* f : {&h.h_B, &h.h_delta}) cuts.insert(cuts.end(), f->times().begin(), f->times().end());
  for (double t : cuts) require(h.h0(t) >= 0.0, "market.intensities.h_delta", "h_A + h_B - h_delta must be >= 0");
}

}  // namespace rshare

#endif  // RSHARE_CONTRACT_STATE_HPP
