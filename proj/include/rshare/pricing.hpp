#ifndef RSHARE_PRICING_HPP
#define RSHARE_PRICING_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rshare/collateral.hpp"
#include "rshare/contract_state.hpp"
#include "rshare/numerics.hpp"
#include "rshare/objective.hpp"
#include "rshare/sde_engine.hpp"

namespace rshare {

/// Price of the one-period bond exchange between two agents funding at R_A
/// and R_B, with unit risk aversion.
inline double motivation_price(double R_A, double R_B, double r, double T, double lambda) {
  if (!(T > 0.0)) throw std::domain_error("motivation_price: requires T > 0");
  if (!(lambda > 0.0)) throw std::domain_error("motivation_price: requires lambda > 0");
  return -0.5 * (std::exp(-R_A * T) + std::exp(-R_B * T)) + std::exp(-r * T) - 0.5 * std::log(lambda);
}

/// Price making full collateralization optimal when nothing is hedged badly
/// and nothing is funded at a spread.
inline double p_hat(double gamma_A, double gamma_B, double nu_A, double nu_B, double lambda) {
  if (!(gamma_A > 0.0) || !(gamma_B > 0.0) || !(lambda > 0.0))
    throw std::domain_error("p_hat: requires gamma_A, gamma_B, lambda > 0");
  const double s = gamma_A + gamma_B;
  return (gamma_B * nu_B - gamma_A * nu_A) / s - std::log(lambda * gamma_B / gamma_A) / s;
}

inline double p_hat(const Scenario& sc) {
  return p_hat(sc.A.gamma, sc.B.gamma, sc.A.nu, sc.B.nu, sc.contract.lambda);
}

/// beta (d_p F + d_x F) at a given delta, F = U_A(x) psi^A + lambda U_B(nu_B - p) psi^B.
/// At delta = delta* this is d_p f-hat + d_x f-hat by the envelope argument.
inline double mpp_integrand(double p, double x, double beta, double delta, const MainParams& m,
                            const NodeContext& n) {
  const double uA = -std::exp(-m.gamma_A * x);
  const double uB = -std::exp(-m.gamma_B * (m.nu_B - p));
  const double dp = m.lambda * m.gamma_B * uB * psi_B(delta, n.h_A, n.h_B, m.L_A, m.L_B, m.gamma_B, n.K);
  const double dx = -m.gamma_A * uA * psi_A(delta, n.h_A, n.h_B, m.L_A, m.L_B, m.gamma_A);
  return beta * (dp + dx);
}

inline constexpr double kMaxQFraction = 1e-3;

struct ResidualEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  double q_fraction = 0.0;
  double clamped_fraction = 0.0;
  double fd_value = std::numeric_limits<double>::quiet_NaN();
  double fd_disagreement = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> warnings;
};

struct ResidualOptions {
  bool fd_check = false;
  double fd_step = 1e-5;
  double fd_warn = 1e-4;
  double appendix_step = 1e-4;
};

namespace detail {

inline ResidualEstimate main_residual(const Scenario& sc, double p, const CollateralRule& rule,
                                      const CleanPricePaths& clean, const ResidualOptions& opt) {
  const auto red = simulate_for_rule(sc, p, rule, clean);
  const std::size_t n = clean.paths(), steps = clean.grid.n_steps;
  const auto ctx = node_contexts(sc, clean);
  const auto mp = MainParams::from(sc);
  const bool closed = rule.kind == CollateralRule::Kind::closed_form_main;
  const double vB0 = sc.B.nu - p;

  std::vector<double> value(n), scale(n);
  std::vector<char> clamped(n);
  std::vector<std::size_t> q_nodes(n, 0);
  std::vector<char> bad(n, 0);

  parallel_for(n, clean.config.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> terms(steps);
    for (std::size_t path = begin; path < end; ++path) {
      for (std::size_t k = 0; k < steps; ++k) {
        const double x = red.X(path, k);
        double delta = rule.delta0;
        if (closed) {
          const auto c = collateral_candidates(p, x, mp, ctx[k].K);
          delta = std::max(0.0, c.i_plus) + std::min(0.0, c.i_minus);
          // kink of f-hat: delta* = 0 with the candidates on opposite sides
          if ((c.i_plus > 0.0 && c.i_minus < 0.0) || (c.i_plus < 0.0 && c.i_minus > 0.0)) {
            ++q_nodes[path];
            const double lo = mpp_integrand(p, x, red.beta(path, k), c.i_minus, mp, ctx[k]);
            const double hi = mpp_integrand(p, x, red.beta(path, k), c.i_plus, mp, ctx[k]);
            terms[k] = 0.5 * (lo + hi) * clean.weight[k];
            continue;
          }
        }
        terms[k] = mpp_integrand(p, x, red.beta(path, k), delta, mp, ctx[k]) * clean.weight[k];
      }
      const double bT = red.beta(path, steps);
      const auto uA = utility(UtilityKind::exponential, sc.A.gamma, red.X(path, steps));
      const auto uB = utility(UtilityKind::exponential, sc.B.gamma, vB0);
      const double head = bT * uA.derivative - sc.contract.lambda * bT * uB.derivative;
      value[path] = head + pairwise_sum(terms);
      scale[path] = std::abs(bT * uA.derivative);
      clamped[path] = (uA.clamped || uB.clamped) ? 1 : 0;
      if (!std::isfinite(value[path])) bad[path] = 1;
    }
  });

  for (std::size_t i = 0; i < n; ++i)
    if (bad[i]) {
      std::ostringstream os;
      os << "mpp_residual: non-finite integrand on path " << clean.global_path(i) << " at p = " << p;
      throw SimulationError(os.str());
    }

  ResidualEstimate out;
  const auto st = sample_stats(value, clean.config.antithetic);
  out.mean = st.mean;
  out.std_error = st.std_error;
  out.n = n;
  std::size_t q = 0, c = 0;
  for (std::size_t i = 0; i < n; ++i) {
    q += q_nodes[i];
    c += clamped[i] ? 1 : 0;
  }
  out.q_fraction = static_cast<double>(q) / static_cast<double>(n * steps);
  out.clamped_fraction = static_cast<double>(c) / static_cast<double>(n);
  if (out.q_fraction > kMaxQFraction) {
    std::ostringstream os;
    os << "mpp_residual: " << out.q_fraction << " of node samples fall on the non-differentiable set (limit "
       << kMaxQFraction << ")";
    throw SolverError(os.str());
  }
  if (out.clamped_fraction > kMaxClampedFraction) {
    std::ostringstream os;
    os << "mpp_residual: integrability check failed, " << out.clamped_fraction << " of paths clamped";
    throw IntegrabilityError(os.str());
  }

  if (opt.fd_check) {
    const double h = opt.fd_step;
    const double up = summarize(reduced_objective_samples(sc, p + h, rule, clean)).mean;
    const double dn = summarize(reduced_objective_samples(sc, p - h, rule, clean)).mean;
    out.fd_value = (up - dn) / (2.0 * h);
    const double denom =
        std::max({std::abs(out.fd_value), std::abs(out.mean), pairwise_sum(scale) / static_cast<double>(n), 1e-300});
    out.fd_disagreement = std::abs(out.fd_value - out.mean) / denom;
    if (out.fd_disagreement > opt.fd_warn) {
      std::ostringstream os;
      os << "envelope residual and finite-difference derivative disagree by " << out.fd_disagreement
         << " (relative) at p = " << p;
      out.warnings.push_back(os.str());
    }
  }
  return out;
}

/// dJ/dp by central differences on common random numbers, per path.
inline ResidualEstimate appendix_residual(const Scenario& sc, double p, const CollateralRule& rule,
                                          const CleanPricePaths& clean, const ResidualOptions& opt) {
  const double h = opt.appendix_step;
  const auto up = reduced_objective_samples(sc, p + h, rule, clean);
  const auto dn = reduced_objective_samples(sc, p - h, rule, clean);
  std::vector<double> d(up.value.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (up.value[i] - dn.value[i]) / (2.0 * h);
  ResidualEstimate out;
  const auto st = sample_stats(d, clean.config.antithetic);
  out.mean = st.mean;
  out.std_error = st.std_error;
  out.n = d.size();
  const auto eu = summarize(up), ed = summarize(dn);
  out.clamped_fraction = std::max(eu.clamped_fraction, ed.clamped_fraction);
  if (!std::isfinite(out.mean)) throw SimulationError("appendix residual: non-finite value at p");
  return out;
}

}  // namespace detail

/// Estimate of dJ/dp at p on the given paths. Main mode uses the maximum
/// principle integrand; appendix mode differentiates J numerically.
inline ResidualEstimate mpp_residual(const Scenario& sc, double p, const CleanPricePaths& clean,
                                     const CollateralRule& rule, const ResidualOptions& opt = {}) {
  check_rule(sc, rule);
  return sc.mode == Mode::main ? detail::main_residual(sc, p, rule, clean, opt)
                               : detail::appendix_residual(sc, p, rule, clean, opt);
}

inline ResidualEstimate mpp_residual(const Scenario& sc, double p, const CleanPricePaths& clean) {
  return mpp_residual(sc, p, clean, default_rule(sc));
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

struct DeltaSummary {
  double mean = 0.0;
  double p5 = 0.0;
  double p95 = 0.0;
  double mean_abs = 0.0;
  double max_abs = 0.0;
};

/// delta on nodes 0..n-1 of every path.
inline std::vector<double> delta_path_values(const Scenario& sc, double p, const CollateralRule& rule,
                                             const CleanPricePaths& clean, const ReducedPaths& red,
                                             bool include_maturity = false) {
  const auto ctx = node_contexts(sc, clean);
  const std::size_t n = clean.paths(), cols = clean.grid.n_steps + (include_maturity ? 1 : 0);
  std::vector<double> out(n * cols);
  parallel_for(n, clean.config.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t path = begin; path < end; ++path)
      for (std::size_t k = 0; k < cols; ++k)
        out[path * cols + k] = apply_rule(rule, sc, p, rule_state(sc, red, path, k), ctx[k]);
  });
  return out;
}

inline DeltaSummary summarize_delta(const std::vector<double>& d) {
  DeltaSummary s;
  if (d.empty()) return s;
  std::vector<double> a(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) a[i] = std::abs(d[i]);
  s.mean = pairwise_sum(d) / static_cast<double>(d.size());
  s.mean_abs = pairwise_sum(a) / static_cast<double>(a.size());
  s.max_abs = *std::max_element(a.begin(), a.end());
  s.p5 = quantile(d, 0.05);
  s.p95 = quantile(d, 0.95);
  return s;
}

struct RiskSharingSolution {
  double p_star = 0.0;
  double residual = 0.0;
  double residual_std_error = 0.0;
  double slope = 0.0;        // d residual / dp at p*
  double p_std_error = 0.0;  // residual std error mapped through the slope
  int evaluations = 0;       // residual evaluations spent on bracketing and Brent
  int iterations = 0;        // Brent evaluations alone
  std::optional<double> p_hat;
  DeltaSummary delta;
  double clamped_fraction = 0.0;
  double q_fraction = 0.0;
  double fd_disagreement = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> warnings;
};

struct SolverOptions {
  std::optional<double> hint;
  double xtol = 1e-12;
  int max_evaluations = 60;
  double p_limit = 1e3;
  double initial_step = 0.25;
  bool fd_check = true;
};

/// Root of the residual on fixed paths. The residual is decreasing in p, so
/// the bracket grows away from the hint in the direction its sign points to.
inline RiskSharingSolution solve_p_star(const Scenario& sc, const CleanPricePaths& clean, const CollateralRule& rule,
                                        const SolverOptions& opt = {}) {
  check_rule(sc, rule);
  RiskSharingSolution sol;
  if (sc.mode == Mode::main) sol.p_hat = p_hat(sc);
  int evals = 0;
  auto R = [&](double p) {
    if (++evals > opt.max_evaluations)
      throw SolverError("solve_p_star: residual evaluation budget exhausted");
    return mpp_residual(sc, p, clean, rule).mean;
  };

  double a = opt.hint.value_or(sol.p_hat.value_or(0.0));
  double Ra = R(a);
  double b = a, Rb = Ra;
  if (Ra != 0.0) {
    const double dir = Ra > 0.0 ? 1.0 : -1.0;
    double step = opt.initial_step;
    for (;;) {
      b = a + dir * step;
      if (std::abs(b) > opt.p_limit) {
        std::ostringstream os;
        os << "solve_p_star: no sign change of the residual within |p| <= " << opt.p_limit;
        throw SolverError(os.str());
      }
      Rb = R(b);
      if ((Rb > 0.0) != (Ra > 0.0) || Rb == 0.0) break;
      // moving toward the root must shrink the residual
      if (dir * (Rb - Ra) > 1e-12 * (std::abs(Ra) + std::abs(Rb))) {
        std::ostringstream os;
        os << "solve_p_star: non-monotone residual between p = " << a << " and p = " << b;
        throw SolverError(os.str());
      }
      a = b;
      Ra = Rb;
      step *= 2.0;
    }
  }
  double root = a;
  if (Ra != 0.0) {
    const int before = evals;
    const auto res = brent_root(R, a, b, Ra, Rb, opt.xtol, opt.max_evaluations);
    root = res.root;
    sol.iterations = evals - before;
  }
  sol.evaluations = evals;
  sol.p_star = root;

  ResidualOptions ro;
  ro.fd_check = opt.fd_check && sc.mode == Mode::main;
  const auto fin = mpp_residual(sc, root, clean, rule, ro);
  sol.residual = fin.mean;
  sol.residual_std_error = fin.std_error;
  sol.q_fraction = fin.q_fraction;
  sol.clamped_fraction = fin.clamped_fraction;
  sol.fd_disagreement = fin.fd_disagreement;
  sol.warnings = fin.warnings;

  const double h = 1e-4 * std::max(1.0, std::abs(root));
  sol.slope = (mpp_residual(sc, root + h, clean, rule).mean - mpp_residual(sc, root - h, clean, rule).mean) / (2.0 * h);
  sol.p_std_error = sol.slope != 0.0 ? sol.residual_std_error / std::abs(sol.slope) : 0.0;

  const auto red = simulate_for_rule(sc, root, rule, clean);
  sol.delta = summarize_delta(delta_path_values(sc, root, rule, clean, red));
  return sol;
}

inline RiskSharingSolution solve_p_star(const Scenario& sc, const SimConfig& cfg, const SolverOptions& opt = {}) {
  validate(sc);
  const auto clean = simulate_clean_price(sc, cfg);
  return solve_p_star(sc, clean, default_rule(sc), opt);
}

}  // namespace rshare

#endif  // RSHARE_PRICING_HPP
