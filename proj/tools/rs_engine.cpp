// rs_engine: price, verify, sweep and margin-check risk-sharing scenarios.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rshare.hpp"
#include "rshare/commands.hpp"

namespace {

unsigned env_threads() {
  const char* s = std::getenv("RS_ENGINE_THREADS");
  if (!s || !*s) return 1;
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (*end != '\0' || v < 1) throw rshare::ConfigError("RS_ENGINE_THREADS", std::string("expected a positive integer, got ") + s);
  return static_cast<unsigned>(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-sharing contract engine: agreement cost p* and optimal collateral delta*"};
  app.require_subcommand(1);

  std::string config_path, out_path, format = "csv", param, grid;
  std::uint64_t seed = 0, paths = 0, steps = 0;
  unsigned threads = 0;
  bool corrupt = false;

  auto common = [&](CLI::App* sub, bool with_format) {
    sub->add_option("--config", config_path, "scenario JSON")->required();
    sub->add_option("--out", out_path, "write results here instead of stdout");
    sub->add_option("--seed", seed, "RNG seed (overrides sim.seed)");
    sub->add_option("--threads", threads, "worker threads (default: RS_ENGINE_THREADS or 1)")->check(CLI::PositiveNumber);
    sub->add_option("--paths", paths, "Monte Carlo paths (overrides sim.n_paths)");
    sub->add_option("--steps", steps, "time steps (overrides sim.n_steps)");
    if (with_format) sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };
  auto* price = app.add_subcommand("price", "solve for the agreement cost p* and summarize delta*");
  common(price, true);
  auto* verify = app.add_subcommand("verify", "run the numerical oracles; exit 1 on any failure");
  common(verify, true);
  verify->add_flag("--corrupt-delta", corrupt, "perturb delta* before the brute-force oracle (mutation self-test)");
  auto* sweep = app.add_subcommand("sweep", "p* and mean |delta*| over a parameter grid");
  common(sweep, true);
  sweep->add_option("--param", param, "lambda, s_A or L_A")->required()->check(CLI::IsMember({"lambda", "s_A", "L_A"}));
  sweep->add_option("--grid", grid, "a:b:n")->required();
  auto* margin = app.add_subcommand("margin-check", "full-margin diagnostics as JSON");
  common(margin, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : rshare::exit_config_error;
  }

  std::ostringstream buf;
  int rc = rshare::exit_ok;
  try {
    rshare::RunFlags flags;
    auto set = [](CLI::App* sub, const char* name) { return sub->get_option(name)->count() > 0; };
    CLI::App* active = app.get_subcommands().front();
    if (set(active, "--seed")) flags.seed = seed;
    if (set(active, "--paths")) flags.paths = paths;
    if (set(active, "--steps")) flags.steps = steps;
    flags.threads = set(active, "--threads") ? threads : env_threads();
    flags.format = format == "json" ? rshare::OutputFormat::json : rshare::OutputFormat::csv;

    const auto lc = rshare::load_config(config_path);
    if (active == price) {
      rc = rshare::cmd_price(lc, flags, buf, std::cerr);
    } else if (active == verify) {
      rshare::VerifyOptions vo;
      vo.corrupt_delta = corrupt;
      rc = rshare::cmd_verify(lc, flags, vo, buf);
    } else if (active == sweep) {
      rc = rshare::cmd_sweep(lc, flags, param, grid, buf);
    } else {
      rc = rshare::cmd_margin_check(lc, flags, buf);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return rshare::exit_config_error;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return rshare::exit_solver_error;
  }

  if (out_path.empty()) {
    std::cout << buf.str();
  } else {
    std::ofstream f(out_path, std::ios::binary);
    if (!(f << buf.str())) {
      std::cerr << "cannot write " << out_path << '\n';
      return rshare::exit_config_error;
    }
  }
  return rc;
}
