#ifndef RSHARE_COLLATERAL_HPP
#define RSHARE_COLLATERAL_HPP

#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "rshare/contract_state.hpp"
#include "rshare/market_model.hpp"
#include "rshare/numerics.hpp"
#include "rshare/sde_engine.hpp"

namespace rshare {

/// Time-only inputs of the collateral rules on one grid node.
struct NodeContext {
  double t = 0.0;
  double G = 1.0;
  double h_A = 0.0;
  double h_B = 0.0;
  double K = 1.0;
  double I = 0.0;  // int_t^T G h_delta
  double s_Am = 0.0;
  double delta_E = 0.0;
};

inline NodeContext node_context(const Scenario& sc, double t, double G, double K) {
  const auto& h = sc.market.intensities;
  NodeContext c;
  c.t = t;
  c.G = G;
  c.h_A = h.h_A(t);
  c.h_B = h.h_B(t);
  c.K = K;
  c.I = dependence_correction(t, sc.contract.maturity, h);
  c.s_Am = sc.A.margin_spread(t);
  c.delta_E = sc.contract.delta_E(t);
  return c;
}

inline std::vector<NodeContext> node_contexts(const Scenario& sc, const CleanPricePaths& clean) {
  std::vector<NodeContext> out(clean.grid.nodes());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = node_context(sc, clean.grid.t(k), clean.G[k], clean.K[k]);
  return out;
}

struct MainParams {
  double gamma_A = 1.0;
  double gamma_B = 1.0;
  double nu_B = 0.0;
  double L_A = 1.0;
  double L_B = 1.0;
  double lambda = 1.0;

  static MainParams from(const Scenario& sc) {
    return {sc.A.gamma, sc.B.gamma, sc.B.nu, sc.A.loss_rate, sc.B.loss_rate, sc.contract.lambda};
  }
};

struct AppendixParams {
  double gamma_B = 1.0;
  double L_A = 1.0;
  double L_B = 1.0;
  double lambda = 1.0;

  static AppendixParams from(const Scenario& sc) {
    return {sc.B.gamma, sc.A.loss_rate, sc.B.loss_rate, sc.contract.lambda};
  }
};

// ---------------------------------------------------------------------------
// Main mode
// ---------------------------------------------------------------------------

/// h_A e^{-gamma_A L_A delta+} + h_B e^{gamma_A L_B delta-}, delta- = max(-delta, 0).
inline double psi_A(double delta, double h_A, double h_B, double L_A, double L_B, double gamma_A) {
  return h_A * std::exp(-gamma_A * L_A * pos(delta)) + h_B * std::exp(gamma_A * L_B * neg(delta));
}

/// h_A e^{gamma_B L_A K delta+} + h_B e^{-gamma_B L_B K delta-}.
inline double psi_B(double delta, double h_A, double h_B, double L_A, double L_B, double gamma_B, double K) {
  return h_A * std::exp(gamma_B * L_A * K * pos(delta)) + h_B * std::exp(-gamma_B * L_B * K * neg(delta));
}

struct Candidates {
  double i_plus = 0.0;
  double i_minus = 0.0;
};

/// Stationary points of the two concave pieces. Same numerator, so same sign.
inline Candidates collateral_candidates(double p, double x, const MainParams& m, double K) {
  const double num =
      m.gamma_B * m.nu_B - m.gamma_B * p - m.gamma_A * x - std::log(m.lambda * K * m.gamma_B / m.gamma_A);
  const double den = m.gamma_B * K + m.gamma_A;
  return {num / (m.L_A * den), num / (m.L_B * den)};
}

inline double delta_star_main(double p, double x, const MainParams& m, double K) {
  const auto c = collateral_candidates(p, x, m, K);
  return std::max(0.0, c.i_plus) + std::min(0.0, c.i_minus);
}

/// U_A(x) psi^A(delta) + lambda U_B(nu_B - p) psi^B(delta).
inline double main_pointwise_objective(double delta, double p, double x, const MainParams& m, const NodeContext& n) {
  const double uA = -std::exp(-m.gamma_A * x);
  const double uB = -std::exp(-m.gamma_B * (m.nu_B - p));
  return uA * psi_A(delta, n.h_A, n.h_B, m.L_A, m.L_B, m.gamma_A) +
         m.lambda * uB * psi_B(delta, n.h_A, n.h_B, m.L_A, m.L_B, m.gamma_B, n.K);
}

// ---------------------------------------------------------------------------
// Concave pieces, used by the brute-force oracle and the appendix scoring
// ---------------------------------------------------------------------------

/// -exp(log_scale + rate * delta)
struct ExpTerm {
  double log_scale = -std::numeric_limits<double>::infinity();
  double rate = 0.0;
};

/// phi(delta) = slope * delta - sum of exp terms, up to a constant.
struct ConcavePiece {
  double slope = 0.0;
  std::array<ExpTerm, 2> terms{};

  /// phi(u) - phi(w) without cancellation.
  double diff(double u, double w) const {
    double out = slope * (u - w);
    for (const auto& e : terms) {
      if (e.log_scale == -std::numeric_limits<double>::infinity()) continue;
      out -= std::exp(e.log_scale + e.rate * w) * std::expm1(e.rate * (u - w));
    }
    return out;
  }
};

/// Objective that is concave on (-inf, split) and on [split, inf) and
/// continuous at split.
struct PiecewiseObjective {
  double split = 0.0;
  ConcavePiece left;
  ConcavePiece right;

  const ConcavePiece& piece(double delta) const { return delta < split ? left : right; }
  /// phi(delta) - phi(split)
  double gain(double delta) const { return piece(delta).diff(delta, split); }
};

inline double safe_log(double x) { return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity(); }

inline PiecewiseObjective main_objective_pieces(double p, double x, const MainParams& m, const NodeContext& n) {
  const double la = -m.gamma_A * x;                                 // log e^{-gamma_A x}
  const double lb = std::log(m.lambda) - m.gamma_B * (m.nu_B - p);  // log lambda e^{-gamma_B(nu_B - p)}
  PiecewiseObjective f;
  f.split = 0.0;
  f.right.terms = {ExpTerm{la + safe_log(n.h_A), -m.gamma_A * m.L_A},
                   ExpTerm{lb + safe_log(n.h_A), m.gamma_B * m.L_A * n.K}};
  f.left.terms = {ExpTerm{la + safe_log(n.h_B), -m.gamma_A * m.L_B},
                  ExpTerm{lb + safe_log(n.h_B), m.gamma_B * m.L_B * n.K}};
  return f;
}

// ---------------------------------------------------------------------------
// Appendix mode (risk-neutral A)
// ---------------------------------------------------------------------------

inline PiecewiseObjective appendix_objective_pieces(double vB, const AppendixParams& m, const NodeContext& n) {
  const double dE = n.delta_E;
  const double margin = (n.G + n.I) * n.s_Am;
  PiecewiseObjective f;
  f.split = -dE;
  f.right.slope = n.G * n.h_A * m.L_A + margin;
  f.right.terms[0] = {safe_log(m.lambda * n.G * n.h_A) - m.gamma_B * vB - m.gamma_B * m.L_A * n.K * neg(dE),
                      m.gamma_B * m.L_A * n.K};
  f.left.slope = n.G * n.h_B * m.L_B + margin;
  f.left.terms[0] = {safe_log(m.lambda * n.G * n.h_B) - m.gamma_B * vB + m.gamma_B * m.L_B * n.K * pos(dE),
                     m.gamma_B * m.L_B * n.K};
  return f;
}

/// g(0, v^B, delta) with U_A linear, plus (G + I) s^{A,m} delta. Terms that do
/// not depend on delta are dropped.
inline double appendix_pointwise_objective(double delta, double vB, const AppendixParams& m, const NodeContext& n) {
  const double dE = n.delta_E;
  auto uB = [&](double y) { return -std::exp(-m.gamma_B * y); };
  double g;
  if (delta + dE >= 0.0) {
    const double a = delta - neg(dE);
    g = n.h_A * (m.L_A * a + m.lambda * uB(vB - m.L_A * n.K * a)) +
        n.h_B * (m.L_B * neg(dE) + m.lambda * uB(vB - m.L_B * n.K * neg(dE)));
  } else {
    const double b = delta + pos(dE);
    g = n.h_B * (m.L_B * b + m.lambda * uB(vB - m.L_B * n.K * b)) +
        n.h_A * (-m.L_A * pos(dE) + m.lambda * uB(vB + m.L_A * n.K * pos(dE)));
  }
  return n.G * g + (n.G + n.I) * n.s_Am * delta;
}

struct AppendixCandidates {
  double i_plus = 0.0;
  double i_minus = 0.0;
};

inline AppendixCandidates appendix_candidates(double vB, const AppendixParams& m, const NodeContext& n) {
  auto ratio = [&](double h, double L, const char* side) {
    const double hl = h * L;
    const double num = n.G * (hl + n.s_Am) + n.s_Am * n.I;
    const double den = n.G * m.lambda * m.gamma_B * n.K * hl;
    if (!(hl > 0.0)) {
      std::ostringstream os;
      os << "delta_star_appendix: h L must be > 0 on the " << side << " side (got " << hl << ")";
      throw std::domain_error(os.str());
    }
    if (!(num > 0.0) || !(den > 0.0)) {
      std::ostringstream os;
      os << "delta_star_appendix: log argument not positive on the " << side << " side (G(hL + s_Am) + s_Am I = "
         << num << ", G lambda gamma_B K h L = " << den << ")";
      throw std::domain_error(os.str());
    }
    return num / den;
  };
  const double gk = m.gamma_B * n.K;
  AppendixCandidates c;
  c.i_minus = -pos(n.delta_E) + vB / (n.K * m.L_B) + std::log(ratio(n.h_B, m.L_B, "minus")) / (gk * m.L_B);
  c.i_plus = neg(n.delta_E) + vB / (n.K * m.L_A) + std::log(ratio(n.h_A, m.L_A, "plus")) / (gk * m.L_A);
  return c;
}

/// Picks the better of the clamped candidates on each side of -delta_E.
/// Equal scores go to the smaller |delta|.
inline double delta_star_appendix(double vB, const AppendixParams& m, const NodeContext& n) {
  const auto c = appendix_candidates(vB, m, n);
  const double kink = -n.delta_E;
  const double up = std::max(c.i_plus, kink);
  const double down = std::min(c.i_minus, kink);
  const auto f = appendix_objective_pieces(vB, m, n);
  const double gu = f.right.diff(up, kink);
  const double gd = f.left.diff(down, kink);
  if (gu > gd) return up;
  if (gd > gu) return down;
  return std::abs(up) <= std::abs(down) ? up : down;
}

// ---------------------------------------------------------------------------
// Rules
// ---------------------------------------------------------------------------

struct CollateralRule {
  enum class Kind { closed_form_main, closed_form_appendix, fixed };
  Kind kind = Kind::closed_form_main;
  double delta0 = 0.0;

  static CollateralRule main() { return {Kind::closed_form_main, 0.0}; }
  static CollateralRule appendix() { return {Kind::closed_form_appendix, 0.0}; }
  static CollateralRule fixed(double d) {
    if (!std::isfinite(d)) throw std::invalid_argument("fixed collateral rule needs a finite delta0");
    return {Kind::fixed, d};
  }
};

inline const char* rule_name(const CollateralRule& r) {
  switch (r.kind) {
    case CollateralRule::Kind::closed_form_main: return "closed_form_main";
    case CollateralRule::Kind::closed_form_appendix: return "closed_form_appendix";
    case CollateralRule::Kind::fixed: return "fixed";
  }
  return "?";
}

/// The rule the scenario's collateral domain calls for.
inline CollateralRule default_rule(const Scenario& sc) {
  if (sc.contract.domain.singleton) return CollateralRule::fixed(sc.contract.domain.delta0);
  return sc.mode == Mode::main ? CollateralRule::main() : CollateralRule::appendix();
}

inline void check_rule(const Scenario& sc, const CollateralRule& r) {
  if (r.kind == CollateralRule::Kind::fixed && !std::isfinite(r.delta0))
    throw std::invalid_argument("fixed collateral rule needs a finite delta0");
  if (r.kind == CollateralRule::Kind::closed_form_appendix && sc.mode != Mode::appendix)
    throw std::invalid_argument("closed_form_appendix rule needs appendix mode");
  if (r.kind == CollateralRule::Kind::closed_form_main && sc.mode != Mode::main)
    throw std::invalid_argument("closed_form_main rule needs main mode");
  if (sc.mode == Mode::main && r.kind != CollateralRule::Kind::fixed &&
      (!sc.A.margin_spread.is_zero() || !sc.B.margin_spread.is_zero()))
    throw std::invalid_argument("closed_form_main rule needs zero margin spreads");
}

/// Evaluates a rule on one node. `state` is X in main mode, v^B in appendix mode.
inline double apply_rule(const CollateralRule& r, const Scenario& sc, double p, double state, const NodeContext& n) {
  switch (r.kind) {
    case CollateralRule::Kind::fixed: return r.delta0;
    case CollateralRule::Kind::closed_form_main: return delta_star_main(p, state, MainParams::from(sc), n.K);
    case CollateralRule::Kind::closed_form_appendix: return delta_star_appendix(state, AppendixParams::from(sc), n);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

struct BruteForceResult {
  double delta = 0.0;
  double gain = 0.0;  // objective at delta minus objective at the split
};

namespace detail {
// Argmax of a concave piece on the half-line starting at `from` in direction `dir`.
inline double search_half_line(const ConcavePiece& f, double from, double dir, double cap) {
  double b = 1.0;
  while (f.diff(from + dir * 2.0 * b, from + dir * b) > 0.0) {
    b *= 2.0;
    if (b > cap) throw SolverError("brute_force_delta: optimum not bracketed within |delta| <= cap");
  }
  const double lo = dir > 0 ? from : from - 2.0 * b;
  const double hi = dir > 0 ? from + 2.0 * b : from;
  auto d = [&](double u, double w) { return f.diff(u, w); };
  const double x = golden_section_argmax_by(d, lo, hi, 1e-13 * (1.0 + 2.0 * b + std::abs(from)), 600);
  // the split itself may win on a piece whose max sits at the boundary
  return f.diff(x, from) > 0.0 ? x : from;
}
}  // namespace detail

/// Golden-section search on each concave piece, then the better piece max.
inline BruteForceResult brute_force_delta(const PiecewiseObjective& f, double cap = 1e6) {
  const double s = f.split;
  const double up = detail::search_half_line(f.right, s, +1.0, cap);
  const double down = detail::search_half_line(f.left, s, -1.0, cap);
  const double gu = f.right.diff(up, s);
  // the left piece is only defined strictly below the split; its sup at the split equals 0
  const double gd = down < s ? f.left.diff(down, s) : 0.0;
  if (gu > gd) return {up, gu};
  if (gd > gu) return {down, gd};
  return std::abs(up) <= std::abs(down) ? BruteForceResult{up, gu} : BruteForceResult{down, gd};
}

inline BruteForceResult brute_force_delta(const CollateralRule& r, const Scenario& sc, double p, double state,
                                          const NodeContext& n, double cap = 1e6) {
  switch (r.kind) {
    case CollateralRule::Kind::fixed: return {r.delta0, 0.0};
    case CollateralRule::Kind::closed_form_main:
      return brute_force_delta(main_objective_pieces(p, state, MainParams::from(sc), n), cap);
    case CollateralRule::Kind::closed_form_appendix:
      return brute_force_delta(appendix_objective_pieces(state, AppendixParams::from(sc), n), cap);
  }
  return {};
}

}  // namespace rshare

#endif  // RSHARE_COLLATERAL_HPP
