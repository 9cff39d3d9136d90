#ifndef RSHARE_MARGIN_ANALYSIS_HPP
#define RSHARE_MARGIN_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rshare/collateral.hpp"
#include "rshare/contract_state.hpp"
#include "rshare/objective.hpp"
#include "rshare/pricing.hpp"
#include "rshare/rng.hpp"
#include "rshare/sde_engine.hpp"

namespace rshare {

inline constexpr double kZeroTol = 1e-12;

struct ZeroFlag {
  std::string name;
  bool zero = true;
  double max_abs = 0.0;
};

struct MarginReport {
  Mode mode = Mode::main;
  std::vector<ZeroFlag> flags;
  double aggregate_phi_max = 0.0;  // |phi^A - (gamma_B/gamma_A) phi^B|, main mode
  double drift_residual_max = 0.0;
  bool verdict = false;  // full margin optimal
  std::optional<double> implied_price;
  std::vector<std::string> violations;
  double max_abs_delta = std::numeric_limits<double>::quiet_NaN();  // at the implied price
  std::vector<std::string> notes;

  const ZeroFlag* flag(const std::string& name) const {
    for (const auto& f : flags)
      if (f.name == name) return &f;
    return nullptr;
  }
};

namespace detail {

/// Grid nodes plus 10 random off-grid times.
inline std::vector<double> probe_times(const TimeGrid& g, std::uint64_t seed) {
  std::vector<double> ts;
  for (std::size_t k = 0; k < g.nodes(); ++k) ts.push_back(g.t(k));
  RandomStream rng(seed, Stream::oracle, 0x6d617267696eULL);
  for (int i = 0; i < 10; ++i) ts.push_back(g.maturity * rng.uniform_open());
  return ts;
}

inline ZeroFlag time_flag(const std::string& name, const PiecewiseConstant& f, const std::vector<double>& ts) {
  ZeroFlag z{name, true, 0.0};
  for (double t : ts) z.max_abs = std::max(z.max_abs, std::abs(f(t)));
  z.zero = z.max_abs <= kZeroTol;
  return z;
}

inline ZeroFlag vector_flag(const std::string& name, const std::vector<double>& b) {
  ZeroFlag z{name, true, 0.0};
  for (double x : b) z.max_abs = std::max(z.max_abs, std::abs(x));
  z.zero = z.max_abs <= kZeroTol;
  return z;
}

inline void finish(MarginReport& rep) {
  rep.verdict = true;
  for (const auto& f : rep.flags)
    if (!f.zero) {
      rep.verdict = false;
      rep.violations.push_back(f.name);
    }
}

}  // namespace detail

/// Necessary conditions for delta* == 0 with two risk-averse agents: both
/// hedging errors vanish and no funding spread reaches either party.
inline MarginReport check_full_margin(const Scenario& sc, const SimConfig& cfg) {
  if (sc.mode != Mode::main) throw std::invalid_argument("check_full_margin: requires main mode");
  validate(sc);
  MarginReport rep;
  rep.mode = Mode::main;
  const auto clean = simulate_clean_price(sc, cfg);
  const auto ts = detail::probe_times(clean.grid, cfg.seed);
  const std::size_t n = clean.paths(), steps = clean.grid.n_steps, d = clean.factors;
  const double ratio = sc.gamma_ratio();

  ZeroFlag fA{"phi_A", true, 0.0}, fB{"phi_B", true, 0.0};
  double agg = 0.0, drift = 0.0;
  std::vector<double> pa(d), pb(d);
  for (std::size_t path = 0; path < n; ++path)
    for (std::size_t k = 0; k < steps; ++k) {
      const auto st = clean.node_state(path, k);
      hedge_phi(Party::A, sc.hedge.A, st, pa);
      hedge_phi(Party::B, sc.hedge.B, st, pb);
      double lamA = 0.0, lamB = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        fA.max_abs = std::max(fA.max_abs, std::abs(pa[j]));
        fB.max_abs = std::max(fB.max_abs, std::abs(pb[j]));
        agg = std::max(agg, std::abs(pa[j] - ratio * pb[j]));
        lamA += pa[j] * (sc.market.risk_premium[j] + sc.A.premium_shift[j]);
        lamB += pb[j] * (sc.market.risk_premium[j] + sc.B.premium_shift[j]);
      }
      const double t = clean.grid.t(k);
      const double sA = sc.A.funding_spread(t), sB = sc.B.funding_spread(t);
      const double s = sA + ratio * sB * st.K;
      const double x_drift = s * st.v + lamA - ratio * lamB + st.delta_A * sc.A.premium_shift[0] +
                             ratio * st.delta_B * sc.B.premium_shift[0];
      drift = std::max(drift, std::abs(x_drift + (sA - sB) / sc.A.gamma));
    }
  fA.zero = fA.max_abs <= kZeroTol;
  fB.zero = fB.max_abs <= kZeroTol;
  rep.flags = {fA,
               fB,
               detail::time_flag("s_A", sc.A.funding_spread, ts),
               detail::time_flag("s_B", sc.B.funding_spread, ts),
               detail::vector_flag("b_A", sc.A.premium_shift),
               detail::vector_flag("b_B", sc.B.premium_shift)};
  rep.aggregate_phi_max = agg;
  rep.drift_residual_max = drift;
  detail::finish(rep);

  const double ph = p_hat(sc);
  if (rep.verdict) rep.implied_price = ph;
  // delta* at the full-margin price along the sampled paths
  const auto rule = CollateralRule::main();
  Scenario probe = sc;
  probe.contract.domain.singleton = false;
  if (!probe.A.margin_spread.is_zero() || !probe.B.margin_spread.is_zero()) {
    rep.notes.push_back("margin spreads are nonzero; delta* probe skipped");
  } else {
    const auto red = simulate_reduced_values(probe, ph, clean);
    const auto ds = delta_path_values(probe, ph, rule, clean, red, true);
    double m = 0.0;
    for (double x : ds) m = std::max(m, std::abs(x));
    rep.max_abs_delta = m;
  }
  return rep;
}

/// Appendix counterpart: only B's hedge and the spreads matter.
inline MarginReport check_full_margin_appendix(const Scenario& sc, const SimConfig& cfg) {
  if (sc.mode != Mode::appendix) throw std::invalid_argument("check_full_margin_appendix: requires appendix mode");
  validate(sc);
  MarginReport rep;
  rep.mode = Mode::appendix;
  const auto clean = simulate_clean_price(sc, cfg);
  const auto ts = detail::probe_times(clean.grid, cfg.seed);
  const std::size_t n = clean.paths(), steps = clean.grid.n_steps, d = clean.factors;

  const auto constant = [](const PiecewiseConstant& f) { return f.is_constant(); };
  if (!constant(sc.A.funding_spread) || !constant(sc.B.funding_spread) || !constant(sc.A.margin_spread) ||
      !constant(sc.market.intensities.h_A) || !constant(sc.market.intensities.h_B))
    rep.notes.push_back("parameters are not constant in time; the conditions are derived for constant inputs");
  if (!sc.market.intensities.independent())
    rep.notes.push_back("h_delta is nonzero; the conditions are derived for independent defaults");

  ZeroFlag fB{"phi_B", true, 0.0};
  double drift = 0.0;
  std::vector<double> pb(d);
  for (std::size_t path = 0; path < n; ++path)
    for (std::size_t k = 0; k < steps; ++k) {
      const auto st = clean.node_state(path, k);
      hedge_phi(Party::B, sc.hedge.B, st, pb);
      double lamB = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        fB.max_abs = std::max(fB.max_abs, std::abs(pb[j]));
        lamB += pb[j] * (sc.market.risk_premium[j] + sc.B.premium_shift[j]);
      }
      const double t = clean.grid.t(k);
      const double sA = sc.A.funding_spread(t), sB = sc.B.funding_spread(t);
      const double r = -sB * st.K * st.v + lamB - st.delta_B * sc.B.premium_shift[0] - (sA - sB) / sc.B.gamma;
      drift = std::max(drift, std::abs(r));
    }
  fB.zero = fB.max_abs <= kZeroTol;
  auto bB = detail::vector_flag("b_B", sc.B.premium_shift);
  rep.flags = {fB, detail::time_flag("s_A", sc.A.funding_spread, ts), detail::time_flag("s_B", sc.B.funding_spread, ts),
               detail::time_flag("s_Am", sc.A.margin_spread, ts), bB};
  rep.drift_residual_max = drift;
  detail::finish(rep);
  return rep;
}

inline MarginReport check_margin(const Scenario& sc, const SimConfig& cfg) {
  return sc.mode == Mode::main ? check_full_margin(sc, cfg) : check_full_margin_appendix(sc, cfg);
}

}  // namespace rshare

#endif  // RSHARE_MARGIN_ANALYSIS_HPP
