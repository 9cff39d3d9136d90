#ifndef RSHARE_OBJECTIVE_HPP
#define RSHARE_OBJECTIVE_HPP

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "rshare/collateral.hpp"
#include "rshare/contract_state.hpp"
#include "rshare/market_model.hpp"
#include "rshare/numerics.hpp"
#include "rshare/rng.hpp"
#include "rshare/sde_engine.hpp"

namespace rshare {

class IntegrabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMaxClampedFraction = 1e-3;

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  double clamped_fraction = 0.0;
  double delta_l2 = 0.0;      // sqrt(E int delta^2 dt)
  double max_form_gap = 0.0;  // g-form vs f-hat form, per path, relative
};

/// Per-path contributions, kept so batches can be pooled before summarizing.
struct ObjectiveSamples {
  std::vector<double> value;
  std::vector<char> clamped;
  std::vector<double> delta_sq;  // int delta^2 dt per path
  double max_form_gap = 0.0;
  bool paired = false;

  void append(const ObjectiveSamples& o) {
    value.insert(value.end(), o.value.begin(), o.value.end());
    clamped.insert(clamped.end(), o.clamped.begin(), o.clamped.end());
    delta_sq.insert(delta_sq.end(), o.delta_sq.begin(), o.delta_sq.end());
    max_form_gap = std::max(max_form_gap, o.max_form_gap);
    paired = o.paired;
  }
};

inline Estimate summarize(const ObjectiveSamples& s, bool enforce_integrability = true) {
  Estimate e;
  const auto st = sample_stats(s.value, s.paired);
  e.mean = st.mean;
  e.std_error = st.std_error;
  e.n = s.value.size();
  const auto n_clamped = std::count(s.clamped.begin(), s.clamped.end(), char{1});
  e.clamped_fraction = s.value.empty() ? 0.0 : static_cast<double>(n_clamped) / static_cast<double>(s.value.size());
  e.delta_l2 = s.delta_sq.empty() ? 0.0 : std::sqrt(pairwise_sum(s.delta_sq) / static_cast<double>(s.delta_sq.size()));
  e.max_form_gap = s.max_form_gap;
  if (enforce_integrability && e.clamped_fraction > kMaxClampedFraction) {
    std::ostringstream os;
    os << "integrability check failed: " << e.clamped_fraction << " of paths hit the exponent clamp (limit "
       << kMaxClampedFraction << ")";
    throw IntegrabilityError(os.str());
  }
  return e;
}

// ---------------------------------------------------------------------------
// Integrands
// ---------------------------------------------------------------------------

/// Main-mode running reward on one node, branch chosen by the sign of delta.
inline double g_integrand(double vA, double vB, double delta, const MainParams& m, const NodeContext& n,
                          bool* clamped = nullptr) {
  bool c = false;
  auto UA = [&](double x) {
    const auto u = utility(UtilityKind::exponential, m.gamma_A, x);
    c |= u.clamped;
    return u.value;
  };
  auto UB = [&](double x) {
    const auto u = utility(UtilityKind::exponential, m.gamma_B, x);
    c |= u.clamped;
    return u.value;
  };
  double g;
  if (delta >= 0.0) {
    g = n.h_A * (UA(vA + m.L_A * delta) + m.lambda * UB(vB - m.L_A * n.K * delta)) +
        n.h_B * (UA(vA) + m.lambda * UB(vB));
  } else {
    g = n.h_B * (UA(vA + m.L_B * delta) + m.lambda * UB(vB - m.L_B * n.K * delta)) +
        n.h_A * (UA(vA) + m.lambda * UB(vB));
  }
  if (clamped) *clamped = c;
  return n.G * g;
}

/// Appendix running reward (A linear), branch chosen by the sign of delta + delta_E.
inline double g_integrand_appendix(double vA, double vB, double delta, const AppendixParams& m, const NodeContext& n,
                                   bool* clamped = nullptr) {
  bool c = false;
  auto UB = [&](double x) {
    const auto u = utility(UtilityKind::exponential, m.gamma_B, x);
    c |= u.clamped;
    return u.value;
  };
  const double dE = n.delta_E;
  double g;
  if (delta + dE >= 0.0) {
    const double a = delta - neg(dE);
    g = n.h_A * (vA + m.L_A * a + m.lambda * UB(vB - m.L_A * n.K * a)) +
        n.h_B * (vA + m.L_B * neg(dE) + m.lambda * UB(vB - m.L_B * n.K * neg(dE)));
  } else {
    const double b = delta + pos(dE);
    g = n.h_B * (vA + m.L_B * b + m.lambda * UB(vB - m.L_B * n.K * b)) +
        n.h_A * (vA - m.L_A * pos(dE) + m.lambda * UB(vB + m.L_A * n.K * pos(dE)));
  }
  if (clamped) *clamped = c;
  return n.G * g;
}

/// beta [U_A(x) psi^A(delta) + lambda U_B(nu_B - p) psi^B(delta)]
inline double f_hat(double p, double x, double beta, double delta, const MainParams& m, const NodeContext& n) {
  return beta * main_pointwise_objective(delta, p, x, m, n);
}

// ---------------------------------------------------------------------------
// Reduced objective
// ---------------------------------------------------------------------------

/// Simulates the reduced values for price p, wiring the rule into the margin
/// feedback when a margin spread is active.
inline ReducedPaths simulate_for_rule(const Scenario& sc, double p, const CollateralRule& rule,
                                      const CleanPricePaths& clean) {
  check_rule(sc, rule);
  const bool feedback = !sc.A.margin_spread.is_zero() || !sc.B.margin_spread.is_zero();
  if (!feedback) return simulate_reduced_values(sc, p, clean);
  const auto ctx = node_contexts(sc, clean);
  return simulate_reduced_values(sc, p, clean, [&](std::size_t k, double vB) {
    return apply_rule(rule, sc, p, vB, ctx[k]);
  });
}

/// State the rule reads on node k: X in main mode, v^B in appendix mode.
inline double rule_state(const Scenario& sc, const ReducedPaths& red, std::size_t path, std::size_t k) {
  return sc.mode == Mode::main ? red.X(path, k) : red.vB(path, k);
}

inline ObjectiveSamples reduced_objective_samples(const Scenario& sc, double p, const CollateralRule& rule,
                                                  const CleanPricePaths& clean, const ReducedPaths& red) {
  check_rule(sc, rule);
  const std::size_t n = clean.paths(), steps = clean.grid.n_steps;
  const double dt = clean.grid.dt();
  const auto ctx = node_contexts(sc, clean);
  const bool main = sc.mode == Mode::main;
  const auto mp = main ? MainParams::from(sc) : MainParams{};
  const auto ap = AppendixParams::from(sc);
  const double lambda = sc.contract.lambda;
  const double vB0 = sc.B.nu - p;

  ObjectiveSamples out;
  out.value.resize(n);
  out.clamped.resize(n);
  out.delta_sq.resize(n);
  out.paired = clean.config.antithetic;
  std::vector<double> gaps(n, 0.0);

  parallel_for(n, clean.config.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> terms(steps), alt(steps), dsq(steps);
    for (std::size_t path = begin; path < end; ++path) {
      bool clamped = false;
      for (std::size_t k = 0; k < steps; ++k) {
        const double delta = apply_rule(rule, sc, p, rule_state(sc, red, path, k), ctx[k]);
        bool c = false;
        if (main) {
          terms[k] = g_integrand(red.vA(path, k), red.vB(path, k), delta, mp, ctx[k], &c) * clean.weight[k];
          alt[k] = f_hat(p, red.X(path, k), red.beta(path, k), delta, mp, ctx[k]) * clean.weight[k];
        } else {
          terms[k] = g_integrand_appendix(red.vA(path, k), red.vB(path, k), delta, ap, ctx[k], &c) * clean.weight[k];
        }
        dsq[k] = delta * delta * dt;
        clamped |= c;
      }
      const double GT = ctx[steps].G;
      const auto uA = utility(utility_kind(sc, Party::A), sc.A.gamma, red.vA(path, steps));
      const auto uB = utility(UtilityKind::exponential, sc.B.gamma, red.vB(path, steps));
      clamped |= uA.clamped || uB.clamped;
      const double value = GT * uA.value + lambda * GT * uB.value + pairwise_sum(terms);
      out.value[path] = value;
      out.delta_sq[path] = pairwise_sum(dsq);
      if (main) {
        const double bT = red.beta(path, steps);
        const double other = bT * (-std::exp(-sc.A.gamma * red.X(path, steps)) +
                                   lambda * -std::exp(-sc.B.gamma * vB0)) +
                             pairwise_sum(alt);
        gaps[path] = std::abs(value - other) / std::max(1.0, std::abs(value));
      }
      out.clamped[path] = clamped ? 1 : 0;
    }
  });
  if (main && !gaps.empty()) out.max_form_gap = *std::max_element(gaps.begin(), gaps.end());
  return out;
}

inline ObjectiveSamples reduced_objective_samples(const Scenario& sc, double p, const CollateralRule& rule,
                                                  const CleanPricePaths& clean) {
  const auto red = simulate_for_rule(sc, p, rule, clean);
  return reduced_objective_samples(sc, p, rule, clean, red);
}

/// E[G_T U_A(v^A_T) + lambda G_T U_B(v^B_T) + int g dt].
inline Estimate reduced_objective(const Scenario& sc, double p, const CollateralRule& rule,
                                  const CleanPricePaths& clean) {
  return summarize(reduced_objective_samples(sc, p, rule, clean));
}

// ---------------------------------------------------------------------------
// Full-filtration objective
// ---------------------------------------------------------------------------

/// Samples default times and pays the first-default close-out directly.
/// Defaults are snapped to the left node of their step.
inline ObjectiveSamples full_filtration_samples(const Scenario& sc, double p, const CollateralRule& rule,
                                                const CleanPricePaths& clean, const ReducedPaths& red) {
  if (!sc.market.intensities.independent())
    throw std::invalid_argument("full_filtration_objective: requires independent defaults (h_delta == 0)");
  check_rule(sc, rule);
  const std::size_t n = clean.paths(), steps = clean.grid.n_steps;
  const double dt = clean.grid.dt(), T = clean.grid.maturity;
  const auto ctx = node_contexts(sc, clean);
  const double lambda = sc.contract.lambda;
  const auto kindA = utility_kind(sc, Party::A);

  ObjectiveSamples out;
  out.value.resize(n);
  out.clamped.resize(n);
  out.paired = clean.config.antithetic;

  parallel_for(n, clean.config.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t path = begin; path < end; ++path) {
      RandomStream rng(clean.config.seed, Stream::default_times, clean.global_path(path));
      const auto tau = sample_default_times(sc.market.intensities, rng);
      const double first = std::min(tau.tau_A, tau.tau_B);
      double payA, payB;
      if (first > T) {
        payA = red.vA(path, steps);
        payB = red.vB(path, steps);
      } else {
        // values are frozen on [t_k, t_k+1), so the default lands on the left node
        const auto k = std::min<std::size_t>(steps - 1, static_cast<std::size_t>(std::floor(first / dt)));
        const Party who = tau.tau_A <= tau.tau_B ? Party::A : Party::B;
        const double delta = apply_rule(rule, sc, p, rule_state(sc, red, path, k), ctx[k]);
        const double theta = breach_amount(delta, who, sc.A.loss_rate, sc.B.loss_rate, ctx[k].delta_E);
        payA = red.vA(path, k) + theta;
        payB = red.vB(path, k) - ctx[k].K * theta;
      }
      const auto uA = utility(kindA, sc.A.gamma, payA);
      const auto uB = utility(UtilityKind::exponential, sc.B.gamma, payB);
      out.value[path] = uA.value + lambda * uB.value;
      out.clamped[path] = (uA.clamped || uB.clamped) ? 1 : 0;
    }
  });
  return out;
}

inline ObjectiveSamples full_filtration_samples(const Scenario& sc, double p, const CollateralRule& rule,
                                                const CleanPricePaths& clean) {
  const auto red = simulate_for_rule(sc, p, rule, clean);
  return full_filtration_samples(sc, p, rule, clean, red);
}

inline Estimate full_filtration_objective(const Scenario& sc, double p, const CollateralRule& rule,
                                          const CleanPricePaths& clean) {
  return summarize(full_filtration_samples(sc, p, rule, clean));
}

}  // namespace rshare

#endif  // RSHARE_OBJECTIVE_HPP
