#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "rshare.hpp"

using namespace rshare;
using nlohmann::json;

namespace {

json main_doc() {
  return json::parse(R"({
    "mode": "main",
    "market": {
      "rate": {"kind": "cir", "k": 0.5, "theta": 0.04, "rho": 0.1, "r0": 0.03},
      "risk_premium": 0.2,
      "intensities": {"h_A": 0.02, "h_B": 0.03}
    },
    "agents": {
      "A": {"gamma": 1.0, "nu": 0.0, "L": 0.5},
      "B": {"gamma": 1.0, "nu": 0.0, "L": 0.5}
    },
    "contract": {"maturity": 1.0, "lambda": 1.0},
    "hedge": {"A": "delta_hedge", "B": "naked"},
    "sim": {"n_paths": 400, "n_steps": 20, "seed": 7}
  })");
}

json motivation_doc(double RA, double RB, double r) {
  return {{"mode", "motivation"}, {"motivation", {{"R_A", RA}, {"R_B", RB}, {"r", r}}}};
}

std::string error_field(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

std::vector<std::vector<std::string>> csv(const std::string& s) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(s);
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(Config, ParsesMainDocument) {
  const auto lc = parse_config(main_doc());
  EXPECT_EQ(lc.mode, ConfigMode::main);
  EXPECT_EQ(lc.sim.n_paths, 400u);
  EXPECT_EQ(lc.sim.seed, 7u);
  EXPECT_EQ(lc.scenario.hedge.B.mode, HedgeMode::naked);
  EXPECT_EQ(lc.scenario.market.risk_premium, std::vector<double>{0.2});
  EXPECT_DOUBLE_EQ(lc.scenario.market.intensities.h_B(0.5), 0.03);
}

TEST(Config, ErrorsCarryFieldPath) {
  auto j = main_doc();
  j["agents"]["A"]["gamma"] = -1.0;
  EXPECT_EQ(error_field(j), "agents.A.gamma");
  j = main_doc();
  j["market"]["rate"]["theta"] = "high";
  EXPECT_EQ(error_field(j), "market.rate.theta");
  j = main_doc();
  j["market"]["rate"].erase("k");
  EXPECT_EQ(error_field(j), "market.rate.k");
  j = main_doc();
  j["contract"]["collateral_domain"] = {{"kind", "interval"}};
  EXPECT_EQ(error_field(j), "contract.collateral_domain.kind");
  j = main_doc();
  j["hedge"]["B"] = "partial";
  EXPECT_EQ(error_field(j), "hedge.B");
  j = main_doc();
  j["sim"]["n_paths"] = 401;
  EXPECT_EQ(error_field(j), "sim.n_paths");
  j = main_doc();
  j["market"]["intensities"]["h_A"] = {{"times", {0.0, 0.5}}, {"values", {0.01}}};
  EXPECT_EQ(error_field(j).rfind("market.intensities.h_A", 0), 0u);
  j = main_doc();
  j["mode"] = "other";
  EXPECT_EQ(error_field(j), "mode");
}

TEST(Config, UnknownKeysRejected) {
  auto j = main_doc();
  j["agents"]["B"]["gama"] = 1.0;
  EXPECT_EQ(error_field(j), "agents.B.gama");
  j = main_doc();
  j["extra"] = 1;
  EXPECT_EQ(error_field(j), "extra");
}

TEST(Config, AppendixAndSingletonAndCustomHedge) {
  auto j = main_doc();
  j["mode"] = "appendix";
  j["agents"]["A"] = {{"risk_neutral", true}, {"L", 0.5}, {"s", 0.01}, {"s_m", 0.002}};
  j["contract"]["delta_E"] = {{"times", {0.0, 0.5}}, {"values", {0.05, -0.02}}};
  j["hedge"]["A"] = {{"mode", "custom"}, {"phi", {0.25}}};
  const auto lc = parse_config(j);
  EXPECT_EQ(lc.scenario.mode, Mode::appendix);
  EXPECT_TRUE(lc.scenario.A.risk_neutral);
  EXPECT_DOUBLE_EQ(lc.scenario.contract.delta_E(0.7), -0.02);
  EXPECT_EQ(lc.scenario.hedge.A.mode, HedgeMode::custom);
  auto k = main_doc();
  k["contract"]["collateral_domain"] = {{"kind", "singleton"}, {"delta0", 0.5}};
  k["agents"]["A"]["s_m"] = 0.01;
  const auto lk = parse_config(k);
  EXPECT_TRUE(lk.scenario.contract.domain.singleton);
  EXPECT_EQ(lk.scenario.contract.domain.delta0, 0.5);
}

TEST(Config, MotivationAndMissingFile) {
  const auto lc = parse_config(motivation_doc(0.05, 0.03, 0.02));
  EXPECT_EQ(lc.mode, ConfigMode::motivation);
  EXPECT_EQ(lc.motivation.T, 1.0);
  EXPECT_EQ(lc.motivation.lambda, 1.0);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Grid, Parsing) {
  EXPECT_EQ(parse_grid("0:1:3"), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(parse_grid("2:5:1"), std::vector<double>{2.0});
  EXPECT_EQ(parse_grid("-1:1:5").size(), 5u);
  EXPECT_THROW(parse_grid("0:1:0"), ConfigError);
  EXPECT_THROW(parse_grid("0:1"), ConfigError);
  EXPECT_THROW(parse_grid("0:1:3x"), ConfigError);
  EXPECT_THROW(parse_grid("0;1;3"), ConfigError);
}

TEST(Commands, PriceCsvAndJson) {
  const auto lc = parse_config(main_doc());
  RunFlags f;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_price(lc, f, out, err), exit_ok);
  const auto rows = csv(out.str());
  ASSERT_EQ(rows.size(), 2u);
  ASSERT_EQ(rows[0].size(), 13u);
  EXPECT_EQ(rows[0][0], "p_star");
  EXPECT_TRUE(std::isfinite(std::stod(rows[1][0])));
  f.format = OutputFormat::json;
  std::ostringstream jout;
  cmd_price(lc, f, jout, err);
  const auto j = json::parse(jout.str());
  EXPECT_EQ(j["p_star"].get<double>(), std::stod(rows[1][0]));
}

TEST(Commands, MotivationPriceHasNanColumns) {
  const auto lc = parse_config(motivation_doc(0.05, 0.03, 0.02));
  RunFlags f;
  std::ostringstream out, err;
  cmd_price(lc, f, out, err);
  const auto rows = csv(out.str());
  EXPECT_EQ(std::stod(rows[1][0]), motivation_price(0.05, 0.03, 0.02, 1.0, 1.0));
  EXPECT_EQ(rows[1][1], "nan");
}

TEST(Commands, FlagsOverrideSim) {
  const auto lc = parse_config(main_doc());
  RunFlags f;
  f.seed = 99;
  f.paths = 64;
  f.steps = 8;
  f.threads = 0;
  const auto s = effective_sim(lc, f);
  EXPECT_EQ(s.seed, 99u);
  EXPECT_EQ(s.n_paths, 64u);
  EXPECT_EQ(s.n_steps, 8u);
  EXPECT_EQ(s.threads, 1u);
  f.paths = 63;
  EXPECT_THROW(effective_sim(lc, f), ConfigError);
}

TEST(Commands, LambdaSweepOnMotivationIsExact) {
  // sigma = 0 and equal returns: p* = -ln(lambda)/2 on every row
  const auto lc = parse_config(motivation_doc(0.02, 0.02, 0.02));
  std::ostringstream out;
  EXPECT_EQ(cmd_sweep(lc, {}, "lambda", "0.5:4:8", out), exit_ok);
  const auto rows = csv(out.str());
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"lambda", "p_star", "mean_abs_delta"}));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double lam = std::stod(rows[i][0]);
    EXPECT_NEAR(std::stod(rows[i][1]), -std::log(lam) / 2, 1e-15) << lam;
    EXPECT_EQ(rows[i][2], "nan");
  }
  std::ostringstream bad;
  EXPECT_THROW(cmd_sweep(lc, {}, "L_A", "0:1:2", bad), ConfigError);
  EXPECT_THROW(cmd_sweep(lc, {}, "lambda", "-1:1:3", bad), ConfigError);
}

TEST(Commands, LambdaSweepPriceFalls) {
  const auto lc = parse_config(main_doc());
  std::ostringstream out;
  cmd_sweep(lc, {}, "lambda", "0.5:2:4", out);
  const auto rows = csv(out.str());
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_LT(std::stod(rows[i][1]), std::stod(rows[i - 1][1]));
}

TEST(Commands, LossRateSweepShrinksCollateral) {
  // B naked: a larger L_A shrinks delta*, while the residual integrand carries
  // no loss rate so the price stays put
  const auto lc = parse_config(main_doc());
  std::ostringstream out;
  cmd_sweep(lc, {}, "L_A", "0.2:0.8:4", out);
  const auto rows = csv(out.str());
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t i = 2; i < rows.size(); ++i) {
    EXPECT_LT(std::stod(rows[i][2]), std::stod(rows[i - 1][2]));
    EXPECT_NEAR(std::stod(rows[i][1]), std::stod(rows[1][1]), 1e-15);
  }
  std::ostringstream bad;
  EXPECT_THROW(cmd_sweep(lc, {}, "L_A", "0.5:1.5:3", bad), ConfigError);
  EXPECT_THROW(cmd_sweep(lc, {}, "gamma", "0:1:2", bad), ConfigError);
}

TEST(Commands, VerifyPassesAndCorruptionFails) {
  const auto lc = parse_config(main_doc());
  RunFlags f;
  std::ostringstream out;
  EXPECT_EQ(cmd_verify(lc, f, {}, out), exit_ok);
  const auto rows = csv(out.str());
  EXPECT_EQ(rows[0][0], "oracle");
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_NE(rows[i][1], "fail") << rows[i][0];
  VerifyOptions vo;
  vo.corrupt_delta = true;
  std::ostringstream bad;
  EXPECT_EQ(cmd_verify(lc, f, vo, bad), exit_verify_failed);
  EXPECT_NE(bad.str().find("delta_star_brute_force,fail"), std::string::npos);
}

TEST(Commands, VerifySkipsReductionWithDependentDefaults) {
  auto j = main_doc();
  j["market"]["intensities"]["h_delta"] = 0.01;
  const auto lc = parse_config(j);
  RunFlags f;
  f.format = OutputFormat::json;
  std::ostringstream out;
  EXPECT_EQ(cmd_verify(lc, f, {}, out), exit_ok);
  bool seen = false;
  for (const auto& r : json::parse(out.str()))
    if (r["oracle"] == "reduction_ci_overlap") {
      seen = true;
      EXPECT_EQ(r["status"], "skip");
      EXPECT_FALSE(r["detail"].get<std::string>().empty());
    }
  EXPECT_TRUE(seen);
}

TEST(Commands, MarginCheckJson) {
  const auto lc = parse_config(main_doc());
  std::ostringstream out;
  EXPECT_EQ(cmd_margin_check(lc, {}, out), exit_ok);
  const auto j = json::parse(out.str());
  EXPECT_FALSE(j["FULL_MARGIN_OPTIMAL"].get<bool>());
  EXPECT_TRUE(j["implied_price"].is_null());
  EXPECT_EQ(j["violations"], json::array({"phi_B"}));
  EXPECT_THROW(cmd_margin_check(parse_config(motivation_doc(0.05, 0.03, 0.02)), {}, out), ConfigError);
}
