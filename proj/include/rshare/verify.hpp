#ifndef RSHARE_VERIFY_HPP
#define RSHARE_VERIFY_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rshare/collateral.hpp"
#include "rshare/config.hpp"
#include "rshare/market_model.hpp"
#include "rshare/numerics.hpp"
#include "rshare/objective.hpp"
#include "rshare/pricing.hpp"
#include "rshare/rng.hpp"
#include "rshare/sde_engine.hpp"

namespace rshare {

enum class OracleStatus { pass, fail, skip };

inline const char* status_name(OracleStatus s) {
  switch (s) {
    case OracleStatus::pass: return "pass";
    case OracleStatus::fail: return "fail";
    case OracleStatus::skip: return "skip";
  }
  return "?";
}

struct OracleResult {
  std::string name;
  OracleStatus status = OracleStatus::skip;
  double measured = std::numeric_limits<double>::quiet_NaN();
  double tolerance = std::numeric_limits<double>::quiet_NaN();
  std::string detail;
};

struct VerifyOptions {
  // mutation self-test: perturbs delta* before it meets the brute-force oracle
  bool corrupt_delta = false;
  std::size_t max_oracle_paths = 64;
};

struct VerifyReport {
  std::vector<OracleResult> results;
  bool ok() const {
    return std::none_of(results.begin(), results.end(), [](const auto& r) { return r.status == OracleStatus::fail; });
  }
};

namespace detail {

inline OracleResult judge(std::string name, double measured, double tol, std::string detail = {}) {
  OracleResult r{std::move(name), measured <= tol ? OracleStatus::pass : OracleStatus::fail, measured, tol,
                 std::move(detail)};
  return r;
}

inline OracleResult skipped(std::string name, std::string why) {
  return {std::move(name), OracleStatus::skip, std::numeric_limits<double>::quiet_NaN(),
          std::numeric_limits<double>::quiet_NaN(), std::move(why)};
}

inline double objective_scale(const PiecewiseObjective& f) {
  double s = 0.0;
  for (const auto* piece : {&f.left, &f.right})
    for (const auto& e : piece->terms)
      if (e.log_scale != -std::numeric_limits<double>::infinity()) s += std::exp(e.log_scale + e.rate * f.split);
  return std::max(s, std::abs(f.right.slope) + std::abs(f.left.slope));
}

// Probe prices: delta* vanishes identically at p-hat in the plain main setup,
// so neighbours are needed for the oracle to see anything.
inline std::vector<double> probe_prices(const Scenario& sc) {
  const double p0 = sc.mode == Mode::main ? p_hat(sc) : 0.0;
  return {p0 - 0.3, p0, p0 + 0.3};
}

inline SimConfig truncated(SimConfig cfg, std::size_t n) {
  cfg.first_path = 0;
  cfg.n_paths = std::min<std::uint64_t>(cfg.n_paths, n);
  if (cfg.antithetic && cfg.n_paths % 2) ++cfg.n_paths;
  return cfg;
}

}  // namespace detail

/// Closed-form delta* against golden-section search on sampled nodes.
inline OracleResult oracle_delta_brute_force(const Scenario& sc, const SimConfig& cfg, const VerifyOptions& opt) {
  const auto rule = default_rule(sc);
  if (rule.kind == CollateralRule::Kind::fixed)
    return detail::skipped("delta_star_brute_force", "collateral domain is a singleton; nothing to optimize");
  const auto clean = simulate_clean_price(sc, detail::truncated(cfg, opt.max_oracle_paths));
  const auto ctx = node_contexts(sc, clean);
  double max_dd = 0.0, max_gap = 0.0;
  std::size_t nodes = 0;
  for (double p : detail::probe_prices(sc)) {
    const auto red = simulate_for_rule(sc, p, rule, clean);
    for (std::size_t path = 0; path < clean.paths(); ++path)
      for (std::size_t k = 0; k < clean.grid.n_steps; ++k) {
        const double state = rule_state(sc, red, path, k);
        double d = apply_rule(rule, sc, p, state, ctx[k]);
        if (opt.corrupt_delta) d = 1.1 * d + 1e-3;
        const auto f = sc.mode == Mode::main ? main_objective_pieces(p, state, MainParams::from(sc), ctx[k])
                                             : appendix_objective_pieces(state, AppendixParams::from(sc), ctx[k]);
        const auto bf = brute_force_delta(f, 1e6);
        max_dd = std::max(max_dd, std::abs(d - bf.delta));
        max_gap = std::max(max_gap, std::max(0.0, bf.gain - f.gain(d)) / detail::objective_scale(f));
        ++nodes;
      }
  }
  auto r = detail::judge("delta_star_brute_force", max_dd, 1e-6);
  if (max_gap > 1e-10) r.status = OracleStatus::fail;
  std::ostringstream os;
  os.precision(3);
  os << nodes << " nodes; max |delta - brute force| = " << max_dd << "; max relative objective gap = " << max_gap
     << " (tol 1e-10)";
  r.detail = os.str();
  return r;
}

/// Reduced objective against the full-filtration objective with sampled
/// default times: 99% confidence intervals must overlap.
inline OracleResult oracle_reduction(const Scenario& sc, const SimConfig& cfg) {
  if (!sc.market.intensities.independent())
    return detail::skipped("reduction_ci_overlap", "h_delta is nonzero; the full-filtration sampler needs independent defaults");
  const double p = detail::probe_prices(sc)[1];
  const auto rule = default_rule(sc);
  const auto clean = simulate_clean_price(sc, cfg);
  const auto red = simulate_for_rule(sc, p, rule, clean);
  const auto a = summarize(reduced_objective_samples(sc, p, rule, clean, red));
  const auto b = summarize(full_filtration_samples(sc, p, rule, clean, red));
  const double z = 2.5758293035489004;
  const double gap = std::abs(a.mean - b.mean);
  auto r = detail::judge("reduction_ci_overlap", gap, z * (a.std_error + b.std_error));
  std::ostringstream os;
  os.precision(10);
  os << "reduced " << a.mean << " +- " << a.std_error << ", full filtration " << b.mean << " +- " << b.std_error
     << " (rule " << rule_name(rule) << ", p = " << p << ")";
  r.detail = os.str();
  return r;
}

struct CirMonteCarlo {
  double mean = 0.0;
  double std_error = 0.0;
};

/// E^Q[exp(-int_0^T r^+ dt)] by full-truncation Euler and the trapezoid rule.
inline CirMonteCarlo cir_bond_monte_carlo(const CirRate& m, double T, std::size_t paths, std::size_t steps,
                                          std::uint64_t seed, unsigned threads = 1) {
  std::vector<double> disc(paths);
  const double dt = T / static_cast<double>(steps), sq = std::sqrt(dt);
  parallel_for(paths, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RandomStream rng(seed, Stream::oracle, (std::uint64_t{1} << 40) + i);
      double r = m.r0, integral = 0.0;
      for (std::size_t k = 0; k < steps; ++k) {
        const double rp = std::max(r, 0.0);
        const double next = r + m.k * (m.theta - rp) * dt + m.rho * std::sqrt(rp) * sq * rng.normal();
        integral += 0.5 * (rp + std::max(next, 0.0)) * dt;
        r = next;
      }
      disc[i] = std::exp(-integral);
    }
  });
  const auto st = sample_stats(disc, false);
  return {st.mean, st.std_error};
}

inline OracleResult oracle_cir(const Scenario& sc, const SimConfig& cfg) {
  if (!sc.market.rate.is_cir()) return detail::skipped("cir_closed_form_mc", "constant rate model");
  const auto& m = sc.market.rate.cir();
  const double T = sc.contract.maturity;
  const auto mc = cir_bond_monte_carlo(m, T, cfg.n_paths, cfg.n_steps, cfg.seed, cfg.threads);
  const double cf = cir_bond_price(0.0, m.r0, m, T);
  auto r = detail::judge("cir_closed_form_mc", std::abs(mc.mean - cf), 3.0 * mc.std_error);
  std::ostringstream os;
  os.precision(12);
  os << "closed form " << cf << ", Monte Carlo " << mc.mean << " +- " << mc.std_error;
  r.detail = os.str();
  return r;
}

/// Bond delta against a central difference of the bond price in r.
inline OracleResult oracle_cir_delta(const Scenario& sc) {
  if (!sc.market.rate.is_cir()) return detail::skipped("cir_delta_fd", "constant rate model");
  const auto& m = sc.market.rate.cir();
  const double T = sc.contract.maturity;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double t = T * i / 100.0;
    const double r = 0.005 + 0.1 * i / 99.0;
    const double h = 1e-6 * r;
    const double de = (cir_bond_price(t, r + h, m, T) - cir_bond_price(t, r - h, m, T)) / (2.0 * h);
    const double fd = m.rho * std::sqrt(r) * de;
    const double an = cir_bond_delta(t, r, m, T, 1.0);
    if (fd != 0.0) worst = std::max(worst, std::abs(an - fd) / std::abs(fd));
  }
  return detail::judge("cir_delta_fd", worst, 1e-6, "100-point grid, relative error");
}

/// The running reward in wealth form equals its price-form rewrite on every
/// node, and the two objective forms agree path by path.
inline OracleResult oracle_f_hat(const Scenario& sc, const SimConfig& cfg, const VerifyOptions& opt) {
  if (sc.mode != Mode::main) return detail::skipped("f_hat_g_identity", "no price-form rewrite in appendix mode");
  const auto rule = default_rule(sc);
  const auto clean = simulate_clean_price(sc, detail::truncated(cfg, opt.max_oracle_paths));
  const auto ctx = node_contexts(sc, clean);
  const auto mp = MainParams::from(sc);
  RandomStream rng(cfg.seed, Stream::oracle, 0x66686174ULL);
  double worst = 0.0, form_gap = 0.0;
  for (double p : detail::probe_prices(sc)) {
    const auto red = simulate_for_rule(sc, p, rule, clean);
    for (std::size_t path = 0; path < clean.paths(); ++path)
      for (std::size_t k = 0; k < clean.grid.n_steps; ++k) {
        const double delta = 4.0 * rng.uniform_open() - 2.0;
        const double g = g_integrand(red.vA(path, k), red.vB(path, k), delta, mp, ctx[k]);
        const double f = f_hat(p, red.X(path, k), red.beta(path, k), delta, mp, ctx[k]);
        worst = std::max(worst, std::abs(g - f) / std::max(1.0, std::abs(g)));
      }
    form_gap = std::max(form_gap, reduced_objective_samples(sc, p, rule, clean, red).max_form_gap);
  }
  auto r = detail::judge("f_hat_g_identity", std::max(worst, form_gap), 1e-10);
  std::ostringstream os;
  os.precision(3);
  os << "max node gap " << worst << ", max path gap " << form_gap;
  r.detail = os.str();
  return r;
}

/// One-period model: golden-section maximization against the closed form.
inline OracleResult oracle_motivation(const MotivationParams& m) {
  const double a = std::exp(-m.R_A * m.T), b = std::exp(-m.R_B * m.T), c = std::exp(-m.r * m.T);
  // U(-c + p + a) + lambda U(c - p - b), differences taken without cancellation
  auto diff = [&](double u, double w) {
    const double x = -c + a, y = c - b;
    return -std::exp(-(x + w)) * std::expm1(-(u - w)) - m.lambda * std::exp(-(y - w)) * std::expm1(u - w);
  };
  const double cf = motivation_price(m.R_A, m.R_B, m.r, m.T, m.lambda);
  const double lo = cf - 10.0, hi = cf + 10.0;
  const double x = golden_section_argmax_by(diff, lo, hi, 1e-13 * (1.0 + std::abs(cf)), 600);
  return detail::judge("motivation_closed_form", std::abs(x - cf), 1e-8, "golden section vs closed form");
}

inline VerifyReport run_verify(const LoadedConfig& lc, const SimConfig& cfg, const VerifyOptions& opt = {}) {
  VerifyReport rep;
  if (lc.mode == ConfigMode::motivation) {
    rep.results.push_back(oracle_motivation(lc.motivation));
    return rep;
  }
  const auto& sc = lc.scenario;
  rep.results.push_back(oracle_delta_brute_force(sc, cfg, opt));
  rep.results.push_back(oracle_reduction(sc, cfg));
  rep.results.push_back(oracle_cir(sc, cfg));
  rep.results.push_back(oracle_cir_delta(sc));
  rep.results.push_back(oracle_f_hat(sc, cfg, opt));
  return rep;
}

}  // namespace rshare

#endif  // RSHARE_VERIFY_HPP
