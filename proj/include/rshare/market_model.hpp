#ifndef RSHARE_MARKET_MODEL_HPP
#define RSHARE_MARKET_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "rshare/piecewise.hpp"
#include "rshare/rng.hpp"

namespace rshare {

inline constexpr double kNeverDefaults = std::numeric_limits<double>::infinity();

struct ConstantRate {
  double level = 0.0;
};

/// dr = k(theta - r)dt + rho sqrt(r) dW under the pricing measure.
struct CirRate {
  double k = 0.0;
  double theta = 0.0;
  double rho = 0.0;
  double r0 = 0.0;

  bool feller() const { return 2.0 * k * theta >= rho * rho; }
};

struct RateModel {
  std::variant<ConstantRate, CirRate> spec;

  bool is_cir() const { return std::holds_alternative<CirRate>(spec); }
  const CirRate& cir() const {
    if (!is_cir()) throw std::invalid_argument("rate model is not CIR");
    return std::get<CirRate>(spec);
  }
  double initial_rate() const {
    return is_cir() ? std::get<CirRate>(spec).r0 : std::get<ConstantRate>(spec).level;
  }
};

struct IntensityCurve {
  PiecewiseConstant h_A;
  PiecewiseConstant h_B;
  PiecewiseConstant h_delta;  // h - h0; zero for independent defaults

  bool independent() const { return h_delta.is_zero(); }

  /// Integral of h0 = h_A + h_B - h_delta over [0, t].
  double cumulative_h0(double t) const {
    return h_A.integral(t) + h_B.integral(t) - h_delta.integral(t);
  }
  double h0(double t) const { return h_A(t) + h_B(t) - h_delta(t); }
};

struct MarketModel {
  RateModel rate;
  std::vector<double> risk_premium{0.0};  // Lambda, one entry per Brownian factor
  PiecewiseConstant remuneration;         // r^m
  IntensityCurve intensities;

  std::size_t factors() const { return risk_premium.size(); }
};

// ---------------------------------------------------------------------------
// CIR zero-coupon bond
// ---------------------------------------------------------------------------

struct AffineCoefficients {
  double a1 = 1.0;  // A1(t, T)
  double a2 = 0.0;  // A2(t, T)
};

/// A1 and A2 of the CIR bond price e = A1 exp(-r A2), for time to maturity tau.
/// Evaluated through a = sqrt(k^2 + 2 rho^2) with a - k = 2 rho^2 / (a + k) so
/// that the rho -> 0 limit stays accurate.
inline AffineCoefficients cir_affine_coefficients(double tau, const CirRate& m) {
  if (tau <= 0.0) return {};
  const double a = std::sqrt(m.k * m.k + 2.0 * m.rho * m.rho);
  if (a == 0.0) return {1.0, tau};
  const double em1 = std::expm1(a * tau);
  AffineCoefficients out;
  out.a2 = 2.0 * em1 / (2.0 * a + (a + m.k) * em1);
  // ln A1 = (2 k theta / rho^2) [-eps tau / 2 - log1p(-eps (1 - e^{-a tau}) / (2a))]
  // with eps = a - k; the rho^2 in eps cancels the prefactor.
  const double one_minus = -std::expm1(-a * tau);
  const double tail = m.rho > 0.0
                          ? std::log1p(-m.rho * m.rho * one_minus / (a * (a + m.k))) / (m.rho * m.rho)
                          : -one_minus / (a * (a + m.k));
  out.a1 = std::exp(2.0 * m.k * m.theta * (-tau / (a + m.k) - tail));
  return out;
}

namespace detail {
inline void check_bond_domain(double t, double r, double maturity) {
  if (t < 0.0 || t > maturity) throw std::domain_error("cir_bond_price: requires 0 <= t <= T");
  if (!(r > 0.0)) throw std::domain_error("cir_bond_price: requires r > 0");
}
}  // namespace detail

/// Bond value for a nonnegative rate level, used on simulated paths where
/// full truncation may leave the state at zero.
inline double cir_bond_price_unchecked(double t, double r, const CirRate& m, double maturity) {
  const auto c = cir_affine_coefficients(maturity - t, m);
  return c.a1 * std::exp(-std::max(r, 0.0) * c.a2);
}

/// Clean price of a unit zero-coupon bond maturing at T under CIR.
inline double cir_bond_price(double t, double r, const CirRate& m, double maturity) {
  detail::check_bond_domain(t, r, maturity);
  return cir_bond_price_unchecked(t, r, m, maturity);
}

inline double cir_bond_price(double t, double r, const RateModel& model, double maturity) {
  return cir_bond_price(t, r, model.cir(), maturity);
}

/// Volatility of the discounted clean price, Z = -rho sqrt(r) A2 e / B.
inline double cir_bond_delta(double t, double r, const CirRate& m, double maturity, double money_account) {
  detail::check_bond_domain(t, r, maturity);
  if (!(money_account > 0.0)) throw std::domain_error("cir_bond_delta: requires B_t > 0");
  const auto c = cir_affine_coefficients(maturity - t, m);
  const double e = c.a1 * std::exp(-r * c.a2);
  return -m.rho * std::sqrt(r) * c.a2 * e / money_account;
}

inline double cir_bond_delta(double t, double r, const RateModel& model, double maturity,
                             double money_account) {
  return cir_bond_delta(t, r, model.cir(), maturity, money_account);
}

// ---------------------------------------------------------------------------
// Survival and default times
// ---------------------------------------------------------------------------

/// G_t = P(tau > t | F_t) for deterministic intensities.
inline double survival(double t, const IntensityCurve& h) {
  if (t <= 0.0) return 1.0;
  return std::exp(-h.cumulative_h0(t));
}

/// I_t = int_t^T G_s h_delta(s) ds, exact on piecewise-constant segments.
inline double dependence_correction(double t, double maturity, const IntensityCurve& h) {
  if (h.independent() || t >= maturity) return 0.0;
  std::vector<double> cuts{t};
  for (const auto* f : {&h.h_A, &h.h_B, &h.h_delta}) {
    auto b = f->breakpoints_in(t, maturity);
    cuts.insert(cuts.end(), b.begin(), b.end());
  }
  cuts.push_back(maturity);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    const double rate0 = h.h0(lo);
    const double hd = h.h_delta(lo);
    if (hd == 0.0) continue;
    const double g_lo = survival(lo, h);
    const double w = hi - lo;
    acc += hd * g_lo * (rate0 != 0.0 ? -std::expm1(-rate0 * w) / rate0 : w);
  }
  return acc;
}

/// Inverse-CDF default time for one party given a uniform draw u in [0, 1].
/// u = 1, or a hazard that never accumulates enough mass, gives kNeverDefaults.
inline double default_time_from_uniform(double u, const PiecewiseConstant& hazard) {
  if (u >= 1.0) return kNeverDefaults;
  const double level = -std::log1p(-std::max(u, 0.0));
  const double tau = hazard.inverse_integral(level);
  return tau > 0.0 ? tau : std::numeric_limits<double>::denorm_min();
}

struct DefaultTimes {
  double tau_A = kNeverDefaults;
  double tau_B = kNeverDefaults;
};

/// Independent default times with hazards h_A, h_B. Rejects dependent
/// intensities since their joint law is not determined by the curves alone.
inline DefaultTimes sample_default_times(const IntensityCurve& h, RandomStream& rng) {
  if (!h.independent())
    throw std::invalid_argument("sample_default_times: requires h_delta == 0 (independent defaults)");
  DefaultTimes out;
  out.tau_A = default_time_from_uniform(rng.uniform_open(), h.h_A);
  out.tau_B = default_time_from_uniform(rng.uniform_open(), h.h_B);
  return out;
}

}  // namespace rshare

#endif  // RSHARE_MARKET_MODEL_HPP
