// Scenarios shared by the tests, built in code so unit tests do not depend on
// the shipped config files.
#pragma once

#include "rshare.hpp"

namespace fx {

inline rshare::CirRate cir() { return {0.5, 0.04, 0.1, 0.03}; }

inline rshare::Scenario base() {
  rshare::Scenario sc;
  sc.mode = rshare::Mode::main;
  sc.market.rate = {cir()};
  sc.market.risk_premium = {0.2};
  sc.market.intensities.h_A = 0.02;
  sc.market.intensities.h_B = 0.03;
  sc.A.gamma = 1.0;
  sc.B.gamma = 1.0;
  sc.A.loss_rate = 0.5;
  sc.B.loss_rate = 0.5;
  sc.A.premium_shift = {0.0};
  sc.B.premium_shift = {0.0};
  sc.contract.maturity = 1.0;
  sc.contract.lambda = 1.0;
  sc.hedge.A = {rshare::HedgeMode::delta_hedge, {}};
  sc.hedge.B = {rshare::HedgeMode::delta_hedge, {}};
  return sc;
}

// s = phi = 0 with nontrivial preferences.
inline rshare::Scenario example1() {
  auto sc = base();
  sc.A.gamma = 1.0;
  sc.B.gamma = 2.0;
  sc.A.nu = 0.1;
  sc.B.nu = 0.3;
  sc.B.loss_rate = 0.6;
  sc.contract.lambda = 1.5;
  return sc;
}

inline rshare::Scenario symmetric() { return base(); }

// A delta-hedged, B naked.
inline rshare::Scenario example2() {
  auto sc = base();
  sc.hedge.B = {rshare::HedgeMode::naked, {}};
  return sc;
}

inline rshare::Scenario bond(double delta0) {
  auto sc = base();
  sc.market.intensities.h_A = 0.02;
  sc.market.intensities.h_B = 0.02;
  sc.hedge.B = {rshare::HedgeMode::naked, {}};
  sc.contract.domain = {true, delta0};
  return sc;
}

inline rshare::Scenario appendix() {
  auto sc = base();
  sc.mode = rshare::Mode::appendix;
  sc.A.risk_neutral = true;
  sc.A.gamma = 0.0;
  sc.A.funding_spread = 0.01;
  sc.A.margin_spread = 0.002;
  sc.B.loss_rate = 0.6;
  sc.B.funding_spread = 0.005;
  sc.contract.delta_E = rshare::PiecewiseConstant({0.0, 0.5}, {0.05, -0.02});
  sc.hedge.A = {rshare::HedgeMode::naked, {}};
  return sc;
}

inline rshare::SimConfig sim(std::size_t paths = 2000, std::size_t steps = 50, std::uint64_t seed = 42) {
  rshare::SimConfig c;
  c.n_paths = paths;
  c.n_steps = steps;
  c.seed = seed;
  return c;
}

}  // namespace fx
