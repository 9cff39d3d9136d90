#ifndef RSHARE_SDE_ENGINE_HPP
#define RSHARE_SDE_ENGINE_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "rshare/contract_state.hpp"
#include "rshare/market_model.hpp"
#include "rshare/numerics.hpp"
#include "rshare/rng.hpp"

namespace rshare {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  std::size_t n_paths = 10000;
  std::size_t n_steps = 100;
  std::uint64_t seed = 42;
  bool antithetic = true;
  unsigned threads = 1;
  // Global index of the first simulated path. Batches with consecutive offsets
  // reproduce one large run piece by piece.
  std::size_t first_path = 0;

  void validate() const {
    if (n_paths < 2) throw ConfigError("sim.n_paths", "must be >= 2");
    if (n_steps < 1) throw ConfigError("sim.n_steps", "must be >= 1");
    if (antithetic && (n_paths % 2 != 0 || first_path % 2 != 0))
      throw ConfigError("sim.n_paths", "antithetic sampling needs an even path count");
  }
};

struct TimeGrid {
  double maturity = 1.0;
  std::size_t n_steps = 1;

  double dt() const { return maturity / static_cast<double>(n_steps); }
  double t(std::size_t k) const {
    return k == n_steps ? maturity : maturity * static_cast<double>(k) / static_cast<double>(n_steps);
  }
  std::size_t nodes() const { return n_steps + 1; }
};

/// Dense paths x nodes table.
class PathSeries {
 public:
  PathSeries() = default;
  PathSeries(std::size_t paths, std::size_t nodes) : paths_(paths), nodes_(nodes), data_(paths * nodes, 0.0) {}

  double& operator()(std::size_t p, std::size_t k) { return data_[p * nodes_ + k]; }
  double operator()(std::size_t p, std::size_t k) const { return data_[p * nodes_ + k]; }
  std::span<double> row(std::size_t p) { return {data_.data() + p * nodes_, nodes_}; }
  std::span<const double> row(std::size_t p) const { return {data_.data() + p * nodes_, nodes_}; }
  std::size_t paths() const { return paths_; }
  std::size_t nodes() const { return nodes_; }
  bool empty() const { return data_.empty(); }

 private:
  std::size_t paths_ = 0;
  std::size_t nodes_ = 0;
  std::vector<double> data_;
};

/// Exogenous part of the simulation: short rate, clean price and deltas.
struct CleanPricePaths {
  TimeGrid grid;
  SimConfig config;
  std::size_t factors = 1;

  PathSeries r;        // short rate (full-truncation state, may dip below 0)
  PathSeries B;        // money account
  PathSeries v;        // (B^A)^{-1} e
  PathSeries delta_A;  // B (B^A)^{-1} Z, loading on factor 0
  PathSeries delta_B;
  std::vector<double> dW;  // [path][step][factor]

  // deterministic in time
  std::vector<double> G;       // survival
  std::vector<double> K;       // B^A / B^B
  std::vector<double> fund_A;  // B^A / B
  std::vector<double> fund_B;  // B^B / B
  // running-reward weight of step k: int_{t_k}^{t_k+1} G ds / G_k. Equals dt
  // without defaults and matches the step default probabilities exactly.
  std::vector<double> weight;

  std::size_t paths() const { return r.paths(); }
  std::span<const double> dw(std::size_t p, std::size_t k) const {
    return {dW.data() + (p * grid.n_steps + k) * factors, factors};
  }
  double B_A(std::size_t p, std::size_t k) const { return B(p, k) * fund_A[k]; }
  double B_B(std::size_t p, std::size_t k) const { return B(p, k) * fund_B[k]; }
  std::uint64_t global_path(std::size_t p) const { return config.first_path + p; }

  NodeState node_state(std::size_t p, std::size_t k) const {
    return {grid.t(k), r(p, k), v(p, k), delta_A(p, k), delta_B(p, k), B(p, k), K[k]};
  }
};

/// Reduced value processes for one price p.
struct ReducedPaths {
  double p = 0.0;
  bool has_X = false;  // X needs gamma_A, absent for a risk-neutral A
  PathSeries vA;
  PathSeries vB;
  PathSeries X;
  PathSeries beta;  // G exp(-gamma_B (v^B - v^B_0))
};

struct PathBundle {
  CleanPricePaths clean;
  ReducedPaths reduced;
};

/// Fills dW for path p. Antithetic partners share a stream and flip sign.
inline void draw_increments(const SimConfig& cfg, std::uint64_t global_path, std::size_t steps,
                            std::size_t factors, double dt, std::span<double> out) {
  const std::uint64_t key = cfg.antithetic ? global_path / 2 : global_path;
  const double sign = (cfg.antithetic && (global_path % 2 == 1)) ? -1.0 : 1.0;
  RandomStream rng(cfg.seed, Stream::brownian, key);
  const double sq = std::sqrt(dt);
  for (std::size_t i = 0; i < steps * factors; ++i) out[i] = sign * sq * rng.normal();
}

/// Deterministic time series shared by all paths.
inline void fill_time_series(const Scenario& sc, CleanPricePaths& out) {
  const auto& g = out.grid;
  out.G.resize(g.nodes());
  out.K.resize(g.nodes());
  out.fund_A.resize(g.nodes());
  out.fund_B.resize(g.nodes());
  for (std::size_t k = 0; k < g.nodes(); ++k) {
    const double t = g.t(k);
    const double iA = sc.A.funding_spread.integral(t);
    const double iB = sc.B.funding_spread.integral(t);
    out.G[k] = survival(t, sc.market.intensities);
    out.fund_A[k] = std::exp(iA);
    out.fund_B[k] = std::exp(iB);
    out.K[k] = std::exp(iA - iB);
  }
  out.weight.assign(g.n_steps, g.dt());
  for (std::size_t k = 0; k < g.n_steps; ++k) {
    const double H = sc.market.intensities.cumulative_h0(g.t(k + 1)) - sc.market.intensities.cumulative_h0(g.t(k));
    if (H > 0.0) out.weight[k] = g.dt() * -std::expm1(-H) / H;
  }
}

/// Short rate, clean price v and deltas on every path.
inline CleanPricePaths simulate_clean_price(const Scenario& sc, const SimConfig& cfg) {
  cfg.validate();
  if (sc.contract.dividend != Dividend::unit_bond_paid_by_A)
    throw std::invalid_argument("simulate_clean_price: unsupported dividend kind");
  CleanPricePaths out;
  out.grid = {sc.contract.maturity, cfg.n_steps};
  out.config = cfg;
  out.factors = sc.market.factors();
  const std::size_t n = cfg.n_paths, nodes = out.grid.nodes(), d = out.factors;
  out.r = PathSeries(n, nodes);
  out.B = PathSeries(n, nodes);
  out.v = PathSeries(n, nodes);
  out.delta_A = PathSeries(n, nodes);
  out.delta_B = PathSeries(n, nodes);
  out.dW.assign(n * cfg.n_steps * d, 0.0);
  fill_time_series(sc, out);

  const double T = sc.contract.maturity;
  const double dt = out.grid.dt();
  const bool cir = sc.market.rate.is_cir();
  const double lambda0 = sc.market.risk_premium[0];

  // The bond coefficients depend only on t, so compute them once.
  std::vector<AffineCoefficients> coef(nodes);
  if (cir)
    for (std::size_t k = 0; k < nodes; ++k) coef[k] = cir_affine_coefficients(T - out.grid.t(k), sc.market.rate.cir());

  parallel_for(n, cfg.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      std::span<double> w(out.dW.data() + p * cfg.n_steps * d, cfg.n_steps * d);
      draw_increments(cfg, out.global_path(p), cfg.n_steps, d, dt, w);
      if (cir) {
        const auto& m = sc.market.rate.cir();
        double r = m.r0, B = 1.0;
        for (std::size_t k = 0; k < nodes; ++k) {
          out.r(p, k) = r;
          out.B(p, k) = B;
          const double rp = std::max(r, 0.0);
          const double e = coef[k].a1 * std::exp(-rp * coef[k].a2);
          const double Z = -m.rho * std::sqrt(rp) * coef[k].a2 * e / B;
          out.v(p, k) = e / (B * out.fund_A[k]);
          out.delta_A(p, k) = Z / out.fund_A[k];
          out.delta_B(p, k) = Z / out.fund_B[k];
          if (k + 1 < nodes) {
            const double vol = m.rho * std::sqrt(rp);
            r += (m.k * (m.theta - rp) + vol * lambda0) * dt + vol * w[k * d];
            B *= std::exp(rp * dt);
          }
        }
      } else {
        const double lvl = std::get<ConstantRate>(sc.market.rate.spec).level;
        for (std::size_t k = 0; k < nodes; ++k) {
          const double t = out.grid.t(k);
          const double B = std::exp(lvl * t);
          out.r(p, k) = lvl;
          out.B(p, k) = B;
          out.v(p, k) = std::exp(-lvl * (T - t)) / (B * out.fund_A[k]);
          out.delta_A(p, k) = 0.0;
          out.delta_B(p, k) = 0.0;
        }
      }
    }
  });
  return out;
}

/// Margin feedback: returns delta at node k given v^B_k. Needed only when a
/// margin spread is nonzero, since then v^A and v^B depend on delta.
using MarginFeedback = std::function<double(std::size_t k, double vB)>;

/// Euler scheme for v^A, v^B and, separately, X, on the Brownian increments
/// stored in `clean`.
inline ReducedPaths simulate_reduced_values(const Scenario& sc, double p, const CleanPricePaths& clean,
                                            const MarginFeedback& feedback = {}) {
  const std::size_t n = clean.paths(), nodes = clean.grid.nodes(), d = clean.factors;
  const double dt = clean.grid.dt();
  ReducedPaths out;
  out.p = p;
  out.has_X = !sc.A.risk_neutral;
  out.vA = PathSeries(n, nodes);
  out.vB = PathSeries(n, nodes);
  out.beta = PathSeries(n, nodes);
  if (out.has_X) out.X = PathSeries(n, nodes);

  const double ratio = out.has_X ? sc.gamma_ratio() : 0.0;
  const auto& Lam = sc.market.risk_premium;
  const auto& bA = sc.A.premium_shift;
  const auto& bB = sc.B.premium_shift;
  const double vA0 = sc.A.nu + p, vB0 = sc.B.nu - p;

  std::vector<double> sA(nodes), sB(nodes), sAm(nodes), sBm(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    const double t = clean.grid.t(k);
    sA[k] = sc.A.funding_spread(t);
    sB[k] = sc.B.funding_spread(t);
    sAm[k] = sc.A.margin_spread(t);
    sBm[k] = sc.B.margin_spread(t);
  }
  const bool needs_feedback = !sc.A.margin_spread.is_zero() || !sc.B.margin_spread.is_zero();
  if (needs_feedback && !feedback)
    throw std::invalid_argument("simulate_reduced_values: nonzero margin spread needs a margin feedback rule");

  parallel_for(n, clean.config.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> phiA(d), phiB(d);
    for (std::size_t path = begin; path < end; ++path) {
      double vA = vA0, vB = vB0, X = vA0;
      for (std::size_t k = 0; k < nodes; ++k) {
        out.vA(path, k) = vA;
        out.vB(path, k) = vB;
        if (out.has_X) out.X(path, k) = X;
        out.beta(path, k) = clean.G[k] * std::exp(-sc.B.gamma * (vB - vB0));
        if (!std::isfinite(vA) || !std::isfinite(vB) || (out.has_X && !std::isfinite(X))) {
          std::ostringstream os;
          os << "non-finite state on path " << clean.global_path(path) << " at node " << k << " (p = " << p
             << ")";
          throw SimulationError(os.str());
        }
        if (k + 1 == nodes) break;

        const NodeState st = clean.node_state(path, k);
        hedge_phi(Party::A, sc.hedge.A, st, phiA);
        hedge_phi(Party::B, sc.hedge.B, st, phiB);
        const auto w = clean.dw(path, k);
        const double v = st.v, dA = st.delta_A, dB = st.delta_B, K = st.K;

        double phiLamA = 0.0, phiLamB = 0.0, dWA = 0.0, dWB = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          phiLamA += phiA[j] * (Lam[j] + bA[j]);
          phiLamB += phiB[j] * (Lam[j] + bB[j]);
          dWA += phiA[j] * w[j];
          dWB += phiB[j] * w[j];
        }
        double driftA = phiLamA + dA * bA[0] + sA[k] * v;
        double driftB = phiLamB - dB * bB[0] - sB[k] * K * v;
        double marginA = 0.0, marginB = 0.0;
        if (needs_feedback) {
          const double delta = feedback(k, vB);
          marginA = sAm[k] * (delta - v);
          marginB = sBm[k] * K * (v - delta);
          driftA += marginA;
          driftB += marginB;
        }

        if (out.has_X) {
          // aggregate drift coded from its own formula, not from driftA/driftB
          const double s = sA[k] + ratio * sB[k] * K;
          const double driftX =
              s * v + phiLamA - ratio * phiLamB + dA * bA[0] + ratio * dB * bB[0] + marginA - ratio * marginB;
          double dWX = 0.0;
          for (std::size_t j = 0; j < d; ++j) dWX += (phiA[j] - ratio * phiB[j]) * w[j];
          X += driftX * dt + dWX;
        }
        vA += driftA * dt + dWA;
        vB += driftB * dt + dWB;
      }
    }
  });
  return out;
}

inline PathBundle simulate(const Scenario& sc, double p, const SimConfig& cfg) {
  PathBundle b;
  b.clean = simulate_clean_price(sc, cfg);
  b.reduced = simulate_reduced_values(sc, p, b.clean);
  return b;
}

}  // namespace rshare

#endif  // RSHARE_SDE_ENGINE_HPP
