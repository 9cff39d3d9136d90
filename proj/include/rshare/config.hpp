#ifndef RSHARE_CONFIG_HPP
#define RSHARE_CONFIG_HPP

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rshare/contract_state.hpp"
#include "rshare/market_model.hpp"
#include "rshare/piecewise.hpp"
#include "rshare/sde_engine.hpp"

namespace rshare {

using Json = nlohmann::json;

enum class ConfigMode { main, appendix, motivation };

/// Inputs of the one-period motivation model.
struct MotivationParams {
  double R_A = 0.0;
  double R_B = 0.0;
  double r = 0.0;
  double T = 1.0;
  double lambda = 1.0;
};

struct LoadedConfig {
  ConfigMode mode = ConfigMode::main;
  Scenario scenario;
  SimConfig sim;
  MotivationParams motivation;
};

namespace cfg {

inline std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline void only_keys(const Json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError(join(path, it.key()), "unknown key");
}

inline const Json& need(const Json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ConfigError(join(path, key), "missing");
  return j.at(key);
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
  return x;
}

inline double number_or(const Json& j, const std::string& path, const char* key, double dflt) {
  return j.contains(key) ? number(j.at(key), join(path, key)) : dflt;
}

inline bool boolean_or(const Json& j, const std::string& path, const char* key, bool dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_boolean()) throw ConfigError(join(path, key), "expected true or false");
  return j.at(key).get<bool>();
}

inline std::uint64_t count_or(const Json& j, const std::string& path, const char* key, std::uint64_t dflt) {
  if (!j.contains(key)) return dflt;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(join(path, key), "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

/// A number, or {"times": [...], "values": [...]}.
inline PiecewiseConstant piecewise(const Json& j, const std::string& path) {
  if (j.is_number()) return PiecewiseConstant(number(j, path));
  only_keys(j, path, {"times", "values"});
  const auto& t = need(j, path, "times");
  const auto& v = need(j, path, "values");
  if (!t.is_array() || !v.is_array()) throw ConfigError(path, "times and values must be arrays");
  std::vector<double> ts, vs;
  for (std::size_t i = 0; i < t.size(); ++i) ts.push_back(number(t[i], join(path, "times[" + std::to_string(i) + "]")));
  for (std::size_t i = 0; i < v.size(); ++i) vs.push_back(number(v[i], join(path, "values[" + std::to_string(i) + "]")));
  try {
    return PiecewiseConstant(std::move(ts), std::move(vs));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

inline PiecewiseConstant piecewise_or(const Json& j, const std::string& path, const char* key, double dflt) {
  return j.contains(key) ? piecewise(j.at(key), join(path, key)) : PiecewiseConstant(dflt);
}

/// A number (broadcast) or an array of numbers.
inline std::vector<double> vec(const Json& j, const std::string& path, std::size_t d) {
  if (j.is_number()) return std::vector<double>(d, number(j, path));
  if (!j.is_array()) throw ConfigError(path, "expected a number or an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline RateModel rate(const Json& j, const std::string& path) {
  const auto& kind = need(j, path, "kind");
  if (!kind.is_string()) throw ConfigError(join(path, "kind"), "expected \"cir\" or \"constant\"");
  const auto k = kind.get<std::string>();
  if (k == "cir") {
    only_keys(j, path, {"kind", "k", "theta", "rho", "r0"});
    CirRate c;
    c.k = number(need(j, path, "k"), join(path, "k"));
    c.theta = number(need(j, path, "theta"), join(path, "theta"));
    c.rho = number(need(j, path, "rho"), join(path, "rho"));
    c.r0 = number(need(j, path, "r0"), join(path, "r0"));
    return {c};
  }
  if (k == "constant") {
    only_keys(j, path, {"kind", "r"});
    return {ConstantRate{number(need(j, path, "r"), join(path, "r"))}};
  }
  throw ConfigError(join(path, "kind"), "expected \"cir\" or \"constant\"");
}

inline AgentParams agent(const Json& j, const std::string& path, std::size_t d) {
  only_keys(j, path, {"gamma", "risk_neutral", "nu", "L", "s", "s_m", "b"});
  AgentParams a;
  a.risk_neutral = boolean_or(j, path, "risk_neutral", false);
  a.gamma = a.risk_neutral ? number_or(j, path, "gamma", 0.0) : number(need(j, path, "gamma"), join(path, "gamma"));
  a.nu = number_or(j, path, "nu", 0.0);
  a.loss_rate = number(need(j, path, "L"), join(path, "L"));
  a.funding_spread = piecewise_or(j, path, "s", 0.0);
  a.margin_spread = piecewise_or(j, path, "s_m", 0.0);
  a.premium_shift = j.contains("b") ? vec(j.at("b"), join(path, "b"), d) : std::vector<double>(d, 0.0);
  return a;
}

inline AgentHedge hedge(const Json& j, const std::string& path) {
  if (j.is_string()) {
    const auto m = j.get<std::string>();
    if (m == "delta_hedge") return {HedgeMode::delta_hedge, {}};
    if (m == "naked") return {HedgeMode::naked, {}};
    throw ConfigError(path, "expected \"delta_hedge\", \"naked\" or {\"mode\": \"custom\", \"phi\": [...]}");
  }
  only_keys(j, path, {"mode", "phi"});
  const auto& m = need(j, path, "mode");
  if (!m.is_string() || m.get<std::string>() != "custom")
    throw ConfigError(join(path, "mode"), "object form needs mode \"custom\"");
  const auto& phi = need(j, path, "phi");
  return {HedgeMode::custom, constant_hedge(vec(phi, join(path, "phi"), 1))};
}

inline SimConfig sim(const Json& j, const std::string& path) {
  only_keys(j, path, {"n_paths", "n_steps", "seed", "antithetic"});
  SimConfig s;
  s.n_paths = count_or(j, path, "n_paths", s.n_paths);
  s.n_steps = count_or(j, path, "n_steps", s.n_steps);
  s.seed = count_or(j, path, "seed", s.seed);
  s.antithetic = boolean_or(j, path, "antithetic", s.antithetic);
  return s;
}

}  // namespace cfg

inline LoadedConfig parse_config(const Json& root) {
  using namespace cfg;
  LoadedConfig out;
  if (!root.is_object()) throw ConfigError("<root>", "expected an object");
  const auto& mode = need(root, "", "mode");
  if (!mode.is_string()) throw ConfigError("mode", "expected \"main\", \"appendix\" or \"motivation\"");
  const auto m = mode.get<std::string>();
  if (m == "motivation") {
    only_keys(root, "", {"mode", "motivation", "sim"});
    out.mode = ConfigMode::motivation;
    const auto& mj = need(root, "", "motivation");
    only_keys(mj, "motivation", {"R_A", "R_B", "r", "T", "lambda"});
    auto& mp = out.motivation;
    mp.R_A = number(need(mj, "motivation", "R_A"), "motivation.R_A");
    mp.R_B = number(need(mj, "motivation", "R_B"), "motivation.R_B");
    mp.r = number(need(mj, "motivation", "r"), "motivation.r");
    mp.T = number_or(mj, "motivation", "T", 1.0);
    mp.lambda = number_or(mj, "motivation", "lambda", 1.0);
    if (!(mp.T > 0.0)) throw ConfigError("motivation.T", "must be > 0");
    if (!(mp.lambda > 0.0)) throw ConfigError("motivation.lambda", "must be > 0");
    if (root.contains("sim")) out.sim = sim(root.at("sim"), "sim");
    return out;
  }
  if (m != "main" && m != "appendix") throw ConfigError("mode", "expected \"main\", \"appendix\" or \"motivation\"");
  only_keys(root, "", {"mode", "market", "agents", "contract", "hedge", "sim"});
  out.mode = m == "main" ? ConfigMode::main : ConfigMode::appendix;
  auto& sc = out.scenario;
  sc.mode = m == "main" ? Mode::main : Mode::appendix;

  const auto& mk = need(root, "", "market");
  only_keys(mk, "market", {"rate", "risk_premium", "remuneration", "intensities"});
  sc.market.rate = rate(need(mk, "market", "rate"), "market.rate");
  sc.market.risk_premium =
      mk.contains("risk_premium") ? vec(mk.at("risk_premium"), "market.risk_premium", 1) : std::vector<double>{0.0};
  sc.market.remuneration = piecewise_or(mk, "market", "remuneration", 0.0);
  const std::size_t d = sc.market.risk_premium.size();
  if (mk.contains("intensities")) {
    const auto& h = mk.at("intensities");
    only_keys(h, "market.intensities", {"h_A", "h_B", "h_delta"});
    sc.market.intensities.h_A = piecewise_or(h, "market.intensities", "h_A", 0.0);
    sc.market.intensities.h_B = piecewise_or(h, "market.intensities", "h_B", 0.0);
    sc.market.intensities.h_delta = piecewise_or(h, "market.intensities", "h_delta", 0.0);
  }

  const auto& ag = need(root, "", "agents");
  only_keys(ag, "agents", {"A", "B"});
  sc.A = agent(need(ag, "agents", "A"), "agents.A", d);
  sc.B = agent(need(ag, "agents", "B"), "agents.B", d);

  const auto& ct = need(root, "", "contract");
  only_keys(ct, "contract", {"maturity", "dividend", "lambda", "delta_E", "collateral_domain"});
  sc.contract.maturity = number(need(ct, "contract", "maturity"), "contract.maturity");
  if (ct.contains("dividend")) {
    const auto& dv = ct.at("dividend");
    if (!dv.is_string() || dv.get<std::string>() != "unit_bond_paid_by_A")
      throw ConfigError("contract.dividend", "only \"unit_bond_paid_by_A\" is supported");
  }
  sc.contract.lambda = number_or(ct, "contract", "lambda", 1.0);
  sc.contract.delta_E = piecewise_or(ct, "contract", "delta_E", 0.0);
  if (ct.contains("collateral_domain")) {
    const auto& dom = ct.at("collateral_domain");
    only_keys(dom, "contract.collateral_domain", {"kind", "delta0"});
    const auto& kind = need(dom, "contract.collateral_domain", "kind");
    const auto k = kind.is_string() ? kind.get<std::string>() : std::string();
    if (k == "singleton") {
      sc.contract.domain.singleton = true;
      sc.contract.domain.delta0 =
          number(need(dom, "contract.collateral_domain", "delta0"), "contract.collateral_domain.delta0");
    } else if (k != "all_reals") {
      throw ConfigError("contract.collateral_domain.kind", "expected \"all_reals\" or \"singleton\"");
    }
  }

  if (root.contains("hedge")) {
    const auto& hj = root.at("hedge");
    only_keys(hj, "hedge", {"A", "B"});
    if (hj.contains("A")) sc.hedge.A = hedge(hj.at("A"), "hedge.A");
    if (hj.contains("B")) sc.hedge.B = hedge(hj.at("B"), "hedge.B");
  }
  if (root.contains("sim")) out.sim = sim(root.at("sim"), "sim");
  validate(sc);
  out.sim.validate();
  return out;
}

inline LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path);
  Json root;
  try {
    in >> root;
  } catch (const Json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(root);
}

}  // namespace rshare

#endif  // RSHARE_CONFIG_HPP
