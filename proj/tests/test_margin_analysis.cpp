#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"

using namespace rshare;

namespace {
bool flagged(const MarginReport& r, const std::string& name) {
  return std::find(r.violations.begin(), r.violations.end(), name) != r.violations.end();
}

void expect_consistent(const MarginReport& r) {
  EXPECT_EQ(r.verdict, r.violations.empty());
  for (const auto& f : r.flags) EXPECT_EQ(f.zero, !flagged(r, f.name)) << f.name;
  EXPECT_EQ(r.implied_price.has_value(), r.verdict && r.mode == Mode::main);
}
}  // namespace

TEST(MarginCheck, HedgedNoSpreadIsFullMargin) {
  const auto sc = fx::example1();
  const auto r = check_margin(sc, fx::sim(500, 40));
  expect_consistent(r);
  EXPECT_TRUE(r.verdict);
  ASSERT_TRUE(r.implied_price.has_value());
  EXPECT_EQ(*r.implied_price, p_hat(sc));
  EXPECT_LE(r.max_abs_delta, 1e-10);
  EXPECT_EQ(r.aggregate_phi_max, 0.0);
  EXPECT_LE(r.drift_residual_max, 1e-14);
}

TEST(MarginCheck, NakedBorrowerViolates) {
  const auto r = check_margin(fx::example2(), fx::sim(500, 40));
  expect_consistent(r);
  EXPECT_FALSE(r.verdict);
  EXPECT_TRUE(flagged(r, "phi_B"));
  EXPECT_FALSE(flagged(r, "phi_A"));
  EXPECT_GT(r.max_abs_delta, 0.0);
  EXPECT_GT(r.aggregate_phi_max, 0.0);
}

TEST(MarginCheck, EachPerturbationFlips) {
  const double eps = 1e-4;
  auto sA = fx::example1();
  sA.A.funding_spread = eps;
  auto sB = fx::example1();
  sB.B.funding_spread = eps;
  auto pA = fx::example1();
  pA.hedge.A = {HedgeMode::custom, constant_hedge({eps})};
  auto pB = fx::example1();
  pB.hedge.B = {HedgeMode::custom, constant_hedge({-eps})};
  auto bA = fx::example1();
  bA.A.premium_shift = {eps};
  const std::pair<Scenario, const char*> cases[] = {{sA, "s_A"}, {sB, "s_B"}, {pA, "phi_A"}, {pB, "phi_B"}, {bA, "b_A"}};
  for (const auto& [sc, name] : cases) {
    const auto r = check_margin(sc, fx::sim(200, 40));
    expect_consistent(r);
    EXPECT_FALSE(r.verdict) << name;
    EXPECT_TRUE(flagged(r, name)) << name;
    EXPECT_EQ(r.violations.size(), 1u) << name;
    EXPECT_GT(r.max_abs_delta, 0.0) << name;
  }
}

TEST(MarginCheck, PiecewiseSpreadCaughtAtProbeTimes) {
  auto sc = fx::example1();
  // zero at the start, nonzero later: a single evaluation at t = 0 would miss it
  sc.A.funding_spread = PiecewiseConstant({0.0, 0.6}, {0.0, 0.01});
  const auto r = check_margin(sc, fx::sim(100, 40));
  EXPECT_TRUE(flagged(r, "s_A"));
}

TEST(MarginCheck, MarginSpreadSkipsProbe) {
  auto sc = fx::bond(0.0);
  sc.hedge.B = {HedgeMode::delta_hedge, {}};
  sc.A.margin_spread = 0.01;
  const auto r = check_margin(sc, fx::sim(100, 20));
  EXPECT_TRUE(std::isnan(r.max_abs_delta));
  EXPECT_FALSE(r.notes.empty());
}

TEST(MarginCheckAppendix, SpreadsViolate) {
  const auto r = check_margin(fx::appendix(), fx::sim(200, 40));
  expect_consistent(r);
  EXPECT_EQ(r.mode, Mode::appendix);
  EXPECT_FALSE(r.verdict);
  EXPECT_TRUE(flagged(r, "s_A"));
  EXPECT_TRUE(flagged(r, "s_B"));
  EXPECT_TRUE(flagged(r, "s_Am"));
  EXPECT_FALSE(flagged(r, "phi_B"));
}

TEST(MarginCheckAppendix, NoSpreadsHedgedBorrowerIsFullMargin) {
  auto sc = fx::appendix();
  sc.A.funding_spread = 0.0;
  sc.A.margin_spread = 0.0;
  sc.B.funding_spread = 0.0;
  const auto r = check_margin(sc, fx::sim(200, 40));
  expect_consistent(r);
  EXPECT_TRUE(r.verdict);
  EXPECT_LE(r.drift_residual_max, 1e-14);
  EXPECT_TRUE(r.notes.empty());
  // A's hedge does not enter
  sc.hedge.A = {HedgeMode::custom, constant_hedge({0.3})};
  EXPECT_TRUE(check_margin(sc, fx::sim(200, 40)).verdict);
}

TEST(MarginCheckAppendix, NakedBorrowerOrPremiumShiftViolates) {
  auto sc = fx::appendix();
  sc.A.funding_spread = 0.0;
  sc.A.margin_spread = 0.0;
  sc.B.funding_spread = 0.0;
  auto naked = sc;
  naked.hedge.B = {HedgeMode::naked, {}};
  auto r = check_margin(naked, fx::sim(200, 40));
  EXPECT_FALSE(r.verdict);
  EXPECT_TRUE(flagged(r, "phi_B"));
  auto shifted = sc;
  shifted.B.premium_shift = {0.01};
  r = check_margin(shifted, fx::sim(200, 40));
  EXPECT_FALSE(r.verdict);
  EXPECT_TRUE(flagged(r, "b_B"));
}

TEST(MarginCheckAppendix, NotesForTimeDependentInputs) {
  auto sc = fx::appendix();
  sc.B.funding_spread = PiecewiseConstant({0.0, 0.5}, {0.0, 0.01});
  sc.market.intensities.h_delta = 0.01;
  const auto r = check_margin(sc, fx::sim(100, 20));
  EXPECT_EQ(r.notes.size(), 2u);
}

TEST(MarginCheck, ModeMismatchRejected) {
  EXPECT_THROW(check_full_margin(fx::appendix(), fx::sim(10, 5)), std::invalid_argument);
  EXPECT_THROW(check_full_margin_appendix(fx::example1(), fx::sim(10, 5)), std::invalid_argument);
}
