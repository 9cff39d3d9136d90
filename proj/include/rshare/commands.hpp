#ifndef RSHARE_COMMANDS_HPP
#define RSHARE_COMMANDS_HPP

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rshare/config.hpp"
#include "rshare/margin_analysis.hpp"
#include "rshare/pricing.hpp"
#include "rshare/verify.hpp"

namespace rshare {

enum ExitCode : int { exit_ok = 0, exit_verify_failed = 1, exit_config_error = 2, exit_solver_error = 3 };

enum class OutputFormat { csv, json };

/// Overrides taken from the command line. Unset fields keep the config value.
struct RunFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> paths;
  std::optional<std::uint64_t> steps;
  unsigned threads = 1;
  OutputFormat format = OutputFormat::csv;
};

inline SimConfig effective_sim(const LoadedConfig& lc, const RunFlags& f) {
  SimConfig s = lc.sim;
  if (f.seed) s.seed = *f.seed;
  if (f.paths) s.n_paths = *f.paths;
  if (f.steps) s.n_steps = *f.steps;
  s.threads = std::max(1u, f.threads);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("sim", e.what());
  }
  return s;
}

/// 17 significant digits; NaN prints as "nan".
inline std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void write_csv(std::ostream& os, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
}

inline nlohmann::ordered_json num(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// price
// ---------------------------------------------------------------------------

inline int cmd_price(const LoadedConfig& lc, const RunFlags& flags, std::ostream& out, std::ostream& err) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  RiskSharingSolution sol;
  if (lc.mode == ConfigMode::motivation) {
    const auto& m = lc.motivation;
    sol.p_star = motivation_price(m.R_A, m.R_B, m.r, m.T, m.lambda);
    sol.residual = sol.residual_std_error = sol.p_std_error = nan;
    sol.delta = {nan, nan, nan, nan, nan};
  } else {
    sol = solve_p_star(lc.scenario, effective_sim(lc, flags));
    for (const auto& w : sol.warnings) err << "warning: " << w << '\n';
  }
  const std::vector<std::pair<std::string, double>> cols = {
      {"p_star", sol.p_star},
      {"residual", sol.residual},
      {"residual_std_error", sol.residual_std_error},
      {"p_std_error", sol.p_std_error},
      {"iterations", static_cast<double>(sol.iterations)},
      {"evaluations", static_cast<double>(sol.evaluations)},
      {"p_hat", sol.p_hat.value_or(nan)},
      {"delta_mean", sol.delta.mean},
      {"delta_p5", sol.delta.p5},
      {"delta_p95", sol.delta.p95},
      {"delta_mean_abs", sol.delta.mean_abs},
      {"clamped_fraction", sol.clamped_fraction},
      {"q_fraction", sol.q_fraction},
  };
  if (flags.format == OutputFormat::csv) {
    std::vector<std::string> header, row;
    for (const auto& [k, v] : cols) {
      header.push_back(k);
      row.push_back(k == "iterations" || k == "evaluations" ? std::to_string(static_cast<long long>(v)) : fmt17(v));
    }
    detail::write_csv(out, header, {row});
  } else {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : cols) {
      if (k == "iterations" || k == "evaluations")
        j[k] = static_cast<long long>(v);
      else
        j[k] = detail::num(v);
    }
    j["warnings"] = sol.warnings;
    out << j.dump(2) << '\n';
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

inline int cmd_verify(const LoadedConfig& lc, const RunFlags& flags, const VerifyOptions& vo, std::ostream& out) {
  const SimConfig cfg = lc.mode == ConfigMode::motivation ? SimConfig{} : effective_sim(lc, flags);
  const auto rep = run_verify(lc, cfg, vo);
  if (flags.format == OutputFormat::csv) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : rep.results) {
      std::string d = r.detail;
      for (auto& ch : d)
        if (ch == ',') ch = ';';
      rows.push_back({r.name, status_name(r.status), fmt17(r.measured), fmt17(r.tolerance), d});
    }
    detail::write_csv(out, {"oracle", "status", "measured", "tolerance", "detail"}, rows);
  } else {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : rep.results)
      j.push_back({{"oracle", r.name},
                   {"status", status_name(r.status)},
                   {"measured", detail::num(r.measured)},
                   {"tolerance", detail::num(r.tolerance)},
                   {"detail", r.detail}});
    out << j.dump(2) << '\n';
  }
  return rep.ok() ? exit_ok : exit_verify_failed;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

/// "a:b:n", n evenly spaced points from a to b inclusive.
inline std::vector<double> parse_grid(const std::string& spec) {
  double a = 0.0, b = 0.0;
  long long n = 0;
  char c1 = 0, c2 = 0;
  std::istringstream is(spec);
  if (!(is >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':' || !(is >> std::ws).eof())
    throw ConfigError("--grid", "expected a:b:n, got \"" + spec + "\"");
  if (n <= 0) throw ConfigError("--grid", "empty grid (n = " + std::to_string(n) + ")");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) g[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

inline LoadedConfig with_param(const LoadedConfig& base, const std::string& param, double x) {
  LoadedConfig lc = base;
  if (lc.mode == ConfigMode::motivation) {
    if (param == "lambda") {
      if (!(x > 0.0)) throw ConfigError("motivation.lambda", "must be > 0");
      lc.motivation.lambda = x;
    } else if (param == "s_A") {
      lc.motivation.R_A = lc.motivation.r + x;
    } else {
      throw ConfigError("--param", param + " has no meaning in the one-period model");
    }
    return lc;
  }
  auto& sc = lc.scenario;
  if (param == "lambda")
    sc.contract.lambda = x;
  else if (param == "s_A")
    sc.A.funding_spread = PiecewiseConstant(x);
  else if (param == "L_A")
    sc.A.loss_rate = x;
  else
    throw ConfigError("--param", "expected lambda, s_A or L_A, got \"" + param + "\"");
  validate(sc);
  return lc;
}

/// One row per grid value. Every row reuses the seed, so rows share random numbers.
inline int cmd_sweep(const LoadedConfig& lc, const RunFlags& flags, const std::string& param,
                     const std::string& grid_spec, std::ostream& out) {
  const auto grid = parse_grid(grid_spec);
  std::vector<LoadedConfig> configs;
  for (double x : grid) configs.push_back(with_param(lc, param, x));
  std::vector<std::array<double, 3>> rows;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& c = configs[i];
    if (c.mode == ConfigMode::motivation) {
      const auto& m = c.motivation;
      rows.push_back({grid[i], motivation_price(m.R_A, m.R_B, m.r, m.T, m.lambda),
                      std::numeric_limits<double>::quiet_NaN()});
    } else {
      const auto sol = solve_p_star(c.scenario, effective_sim(c, flags));
      rows.push_back({grid[i], sol.p_star, sol.delta.mean_abs});
    }
  }
  if (flags.format == OutputFormat::csv) {
    std::vector<std::vector<std::string>> body;
    for (const auto& r : rows) body.push_back({fmt17(r[0]), fmt17(r[1]), fmt17(r[2])});
    detail::write_csv(out, {param, "p_star", "mean_abs_delta"}, body);
  } else {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : rows)
      j.push_back({{param, detail::num(r[0])}, {"p_star", detail::num(r[1])}, {"mean_abs_delta", detail::num(r[2])}});
    out << j.dump(2) << '\n';
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------
// margin-check
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json margin_report_json(const MarginReport& rep) {
  nlohmann::ordered_json j;
  j["mode"] = rep.mode == Mode::main ? "main" : "appendix";
  j["FULL_MARGIN_OPTIMAL"] = rep.verdict;
  j["implied_price"] = rep.implied_price ? detail::num(*rep.implied_price) : nlohmann::ordered_json(nullptr);
  j["violations"] = rep.violations;
  nlohmann::ordered_json flags = nlohmann::ordered_json::object();
  for (const auto& f : rep.flags) flags[f.name] = {{"zero", f.zero}, {"max_abs", f.max_abs}};
  j["flags"] = flags;
  if (rep.mode == Mode::main) j["aggregate_phi_max"] = rep.aggregate_phi_max;
  j["drift_residual_max"] = rep.drift_residual_max;
  j["max_abs_delta"] = detail::num(rep.max_abs_delta);
  j["notes"] = rep.notes;
  return j;
}

/// Always JSON; the verdict is data, so the exit code is 0 either way.
inline int cmd_margin_check(const LoadedConfig& lc, const RunFlags& flags, std::ostream& out) {
  if (lc.mode == ConfigMode::motivation)
    throw ConfigError("mode", "margin-check needs a main or appendix scenario");
  const auto rep = check_margin(lc.scenario, effective_sim(lc, flags));
  out << margin_report_json(rep).dump(2) << '\n';
  return exit_ok;
}

}  // namespace rshare

#endif  // RSHARE_COMMANDS_HPP
