// Acceptance run: one [PASS]/[FAIL] line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "rshare.hpp"

#ifndef RSHARE_CONFIG_DIR
#error "RSHARE_CONFIG_DIR must point at configs/"
#endif

using namespace rshare;

namespace {

int failures = 0;

void report(const char* id, bool ok, const std::string& what) {
  std::printf("[%s] %s %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

LoadedConfig config(const char* name) { return load_config(std::string(RSHARE_CONFIG_DIR) + "/" + name); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// AC1: one-period closed form against a long-double golden section
void ac1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 g(101);
  std::uniform_real_distribution<double> U(0, 1);
  double worst = 0, worst_mid = 0;
  for (int i = 0; i < 20; ++i) {
    const double RA = 0.1 * U(g), RB = 0.1 * U(g), r = 0.1 * U(g), T = 0.25 + 5 * U(g), lam = 0.2 + 5 * U(g);
    const double cf = motivation_price(RA, RB, r, T, lam);
    const double ref = static_cast<double>(oracle::motivation_argmax(RA, RB, r, T, lam));
    worst = std::max(worst, std::abs(cf - ref));
    const double mid = std::exp(-r * T) - (std::exp(-RA * T) + std::exp(-RB * T)) / 2;
    worst_mid = std::max(worst_mid, std::abs(motivation_price(RA, RB, r, T, 1.0) - mid));
  }
  const double secs = seconds_since(t0);
  report("AC1", worst <= 1e-8 && worst_mid <= 1e-12 && secs < 1.0,
         fmt("max |p - p_oracle| = %.3g (tol 1e-8), lambda=1 midpoint gap %.3g (tol 1e-12), %.3f s (limit 1 s)", worst,
             worst_mid, secs));
}

// AC2: example1 recovers p-hat; the symmetric case prices at zero with no collateral
void ac2() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto lc = config("example1.json");
  const auto sol = solve_p_star(lc.scenario, lc.sim);
  const double secs = seconds_since(t0);
  // root tolerance 1e-10 on top of 3 se: the residual here has no sampling noise
  const double gap = std::abs(sol.p_star - *sol.p_hat);
  const bool ok1 = gap <= 3 * sol.p_std_error + 1e-10 && secs < 30.0;
  const auto ls = config("example1_symmetric.json");
  const auto sym = solve_p_star(ls.scenario, ls.sim);
  const auto clean = simulate_clean_price(ls.scenario, ls.sim);
  const auto red = simulate_reduced_values(ls.scenario, sym.p_star, clean);
  double dmax = 0;
  for (double d : delta_path_values(ls.scenario, sym.p_star, CollateralRule::main(), clean, red, true))
    dmax = std::max(dmax, std::abs(d));
  const bool ok2 = std::abs(sym.p_star) <= 3 * sym.p_std_error + 1e-12 && dmax <= 1e-10;
  report("AC2", ok1 && ok2,
         fmt("|p* - p_hat| = %.3g (3se = %.3g, root tol 1e-10), %.2f s (limit 30 s); ", gap, 3 * sol.p_std_error, secs) +
             fmt("symmetric p* = %.3g (3se = %.3g), max|delta| = %.3g (tol 1e-10)", sym.p_star, 3 * sym.p_std_error, dmax));
}

// AC3: closed-form collateral against brute force and the long-double oracle
void ac3() {
  std::mt19937_64 g(303);
  std::uniform_real_distribution<double> U(0, 1);
  double worst = 0, gap = 0;
  for (int i = 0; i < 1000; ++i) {
    MainParams m{0.2 + 3 * U(g), 0.2 + 3 * U(g), -0.5 + U(g), 0.05 + 0.95 * U(g), 0.05 + 0.95 * U(g), 0.2 + 4 * U(g)};
    NodeContext n;
    n.h_A = 0.001 + 0.1 * U(g);
    n.h_B = 0.001 + 0.1 * U(g);
    n.K = 0.8 + 0.4 * U(g);
    n.G = 0.7 + 0.3 * U(g);
    const double p = -1 + 2 * U(g), x = -1 + 2 * U(g);
    const double ds = delta_star_main(p, x, m, n.K);
    const auto f = main_objective_pieces(p, x, m, n);
    const auto bf = brute_force_delta(f);
    const double ld = static_cast<double>(
        oracle::main_argmax({m.gamma_A, m.gamma_B, m.nu_B, m.L_A, m.L_B, m.lambda, n.h_A, n.h_B, n.K, p, x}));
    worst = std::max({worst, std::abs(ds - bf.delta), std::abs(ds - ld)});
    gap = std::max(gap, std::max(0.0, bf.gain - f.gain(ds)) / std::abs(main_pointwise_objective(0.0, p, x, m, n)));
  }
  for (int i = 0; i < 1000; ++i) {
    AppendixParams m{0.2 + 3 * U(g), 0.05 + 0.95 * U(g), 0.05 + 0.95 * U(g), 0.2 + 4 * U(g)};
    NodeContext n;
    n.h_A = 0.001 + 0.1 * U(g);
    n.h_B = 0.001 + 0.1 * U(g);
    n.K = 0.8 + 0.4 * U(g);
    n.G = 0.7 + 0.3 * U(g);
    n.s_Am = 0.01 * U(g);
    n.I = 0.05 * U(g);
    n.delta_E = -1 + 2 * U(g);
    const double vB = -1 + 2 * U(g);
    const double ds = delta_star_appendix(vB, m, n);
    const auto f = appendix_objective_pieces(vB, m, n);
    const auto bf = brute_force_delta(f);
    const double ld = static_cast<double>(oracle::appendix_argmax(
        {m.gamma_B, m.L_A, m.L_B, m.lambda, n.h_A, n.h_B, n.K, n.G, n.I, n.s_Am, n.delta_E, vB}));
    worst = std::max({worst, std::abs(ds - bf.delta), std::abs(ds - ld)});
    gap = std::max(gap, std::max(0.0, bf.gain - f.gain(ds)) /
                            std::abs(appendix_pointwise_objective(-n.delta_E, vB, m, n)));
  }
  report("AC3", worst <= 1e-6 && gap <= 1e-10,
         fmt("2000 tuples (main + appendix): max |delta* - argmax| = %.3g (tol 1e-6), relative gain gap %.3g (tol 1e-10)",
             worst, gap));
}

// AC4: reduced objective against sampled default times, pooled over batches
void ac4() {
  const auto lc = config("bond_default.json");
  const double z = 2.5758293035489004;
  const std::size_t total = 100000, batch = 20000;
  double worst_ratio = 0;
  bool ok = true;
  std::string detail;
  for (double d0 : {-0.5, 0.0, 0.5})
    for (std::uint64_t seed : {11u, 12u, 13u}) {
      auto sc = lc.scenario;
      sc.contract.domain = {true, d0};
      const auto rule = CollateralRule::fixed(d0);
      ObjectiveSamples a, b;
      for (std::size_t first = 0; first < total; first += batch) {
        auto cfg = lc.sim;
        cfg.seed = seed;
        cfg.n_paths = batch;
        cfg.first_path = first;
        const auto clean = simulate_clean_price(sc, cfg);
        const auto red = simulate_for_rule(sc, 0.0, rule, clean);
        a.append(reduced_objective_samples(sc, 0.0, rule, clean, red));
        b.append(full_filtration_samples(sc, 0.0, rule, clean, red));
      }
      const auto ea = summarize(a), eb = summarize(b);
      const double lim = z * (ea.std_error + eb.std_error);
      const double gap = std::abs(ea.mean - eb.mean);
      worst_ratio = std::max(worst_ratio, gap / lim);
      if (!(gap <= lim)) {
        ok = false;
        detail += fmt(" [delta0 %g seed %g: gap %.3g > %.3g]", d0, static_cast<double>(seed), gap, lim);
      }
    }
  report("AC4", ok,
         fmt("9 runs of 1e5 paths: max gap / (z99 (se1 + se2)) = %.3f (must be <= 1)", worst_ratio) + detail);
}

// AC5: CIR bond closed form and delta
void ac5() {
  const auto m = config("example1.json").scenario.market.rate.cir();
  const auto mc = oracle::cir_mc(m.r0, m.k, m.theta, m.rho, 1.0, 100000, 200, 505);
  const double cf = cir_bond_price(0.0, m.r0, m, 1.0);
  const double dev = std::abs(cf - mc.mean);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const double t = 0.0099 * i, r = 0.002 + 0.15 * i / 99.0;
    const long double h = 1e-5L * r;
    const long double de = (oracle::cir_printed(t, r + h, m.k, m.theta, m.rho, 1.0L) -
                            oracle::cir_printed(t, r - h, m.k, m.theta, m.rho, 1.0L)) /
                           (2 * h);
    const double fd = static_cast<double>(m.rho * std::sqrt(static_cast<long double>(r)) * de);
    worst = std::max(worst, std::abs(cir_bond_delta(t, r, m, 1.0, 1.0) - fd) / std::abs(fd));
  }
  report("AC5", dev <= 3 * mc.se && worst <= 1e-6,
         fmt("|closed form - MC| = %.3g (3se = %.3g, 1e5 x 200); delta vs FD max rel err %.3g (tol 1e-6)", dev,
             3 * mc.se, worst));
}

// AC6: example2 branch formula, monotone residual, Brent budget
void ac6() {
  const auto lc = config("example2.json");
  const auto& sc = lc.scenario;
  const auto clean = simulate_clean_price(sc, lc.sim);
  const auto ctx = node_contexts(sc, clean);
  const auto mp = MainParams::from(sc);
  const double g = sc.A.gamma;
  auto U = [&](double x) { return -std::exp(-g * x); };
  double worst = 0;
  for (double p : {-0.2, 0.0, 0.2}) {
    const auto red = simulate_reduced_values(sc, p, clean);
    for (std::size_t i = 0; i < clean.paths(); ++i)
      for (std::size_t k = 0; k < clean.grid.n_steps; ++k) {
        const double X = red.X(i, k), beta = red.beta(i, k);
        const double d = apply_rule(CollateralRule::main(), sc, p, X, ctx[k]);
        const double h = (-X - p >= 0) ? ctx[k].h_B : ctx[k].h_A;
        worst = std::max(worst, std::abs(mpp_integrand(p, X, beta, d, mp, ctx[k]) + g * h * beta * (U(X) - U(-p))));
      }
  }
  bool decreasing = true;
  double prev = INFINITY;
  for (double p : {-0.4, -0.2, 0.0, 0.2, 0.4}) {
    const double r = mpp_residual(sc, p, clean).mean;
    decreasing = decreasing && r < prev;
    prev = r;
  }
  const auto sol = solve_p_star(sc, clean, CollateralRule::main());
  report("AC6", worst <= 1e-10 && decreasing && sol.evaluations <= 60,
         fmt("node gap %.3g (tol 1e-10); residual strictly decreasing on 5 points: ", worst) +
             (decreasing ? "yes" : "no") + fmt("; p* = %.6g after %g evaluations (limit 60)", sol.p_star, sol.evaluations));
}

// AC7: margin checker on example1 and its single-input perturbations
void ac7() {
  const auto lc = config("example1.json");
  auto cfg = lc.sim;
  cfg.n_paths = 2000;
  const auto base = check_margin(lc.scenario, cfg);
  bool ok = base.verdict && base.implied_price && *base.implied_price == p_hat(lc.scenario) && base.max_abs_delta <= 1e-10;
  std::string detail = std::string(base.verdict ? "base full margin" : "base NOT full margin") + fmt(", max|delta| %.3g;", base.max_abs_delta);
  const double eps = 1e-4;
  for (int which = 0; which < 4; ++which) {
    auto sc = lc.scenario;
    const char* name = "";
    switch (which) {
      case 0: sc.A.funding_spread = eps, name = "s_A"; break;
      case 1: sc.B.funding_spread = eps, name = "s_B"; break;
      case 2: sc.hedge.A = {HedgeMode::custom, constant_hedge({eps})}, name = "phi_A"; break;
      default: sc.hedge.B = {HedgeMode::custom, constant_hedge({eps})}, name = "phi_B"; break;
    }
    const auto r = check_margin(sc, cfg);
    const bool flipped = !r.verdict && r.max_abs_delta > 0.0;
    ok = ok && flipped;
    detail += std::string(" ") + name + (flipped ? " flips" : " DOES NOT flip") + fmt(" (max|delta| %.3g)", r.max_abs_delta);
  }
  report("AC7", ok, detail);
}

// AC8: appendix reduced forms and the dependence correction
void ac8() {
  std::mt19937_64 g(808);
  std::uniform_real_distribution<double> U(0, 1);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    AppendixParams m{0.2 + 3 * U(g), 0.05 + 0.95 * U(g), 0.05 + 0.95 * U(g), 0.2 + 4 * U(g)};
    NodeContext n;
    n.h_A = 0.001 + 0.1 * U(g);
    n.h_B = 0.001 + 0.1 * U(g);
    n.K = 0.8 + 0.4 * U(g);
    n.G = 0.7 + 0.3 * U(g);
    n.delta_E = -1 + 2 * U(g);
    const double vB = -1 + 2 * U(g);
    const double gk = m.gamma_B * n.K, l = std::log(m.lambda * m.gamma_B * n.K);
    const double im = -std::max(n.delta_E, 0.0) + vB / (n.K * m.L_B) - l / (gk * m.L_B);
    const double ip = std::max(-n.delta_E, 0.0) + vB / (n.K * m.L_A) - l / (gk * m.L_A);
    const auto c = appendix_candidates(vB, m, n);
    worst = std::max({worst, std::abs(c.i_minus - im) / (1 + std::abs(im)), std::abs(c.i_plus - ip) / (1 + std::abs(ip))});
  }
  const auto lc = config("appendix.json");
  auto cfg = lc.sim;
  cfg.n_paths = 100;
  const auto ctx = node_contexts(lc.scenario, simulate_clean_price(lc.scenario, cfg));
  bool zero = true;
  for (const auto& n : ctx) zero = zero && n.I == 0.0;
  auto dep = lc.scenario;
  dep.market.intensities.h_delta = 0.01;
  const auto ctx2 = node_contexts(dep, simulate_clean_price(dep, cfg));
  const bool positive = ctx2.front().I > 0.0;
  report("AC8", worst <= 1e-12 && zero && positive,
         fmt("reduced forms max rel err %.3g (tol 1e-12); I == 0 on all nodes without h_delta: ", worst) +
             (zero ? "yes" : "no") + (positive ? "; I > 0 with h_delta" : "; I not positive with h_delta"));
}

// AC9: output bytes do not depend on the thread count
void ac9() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"example2.json", "appendix.json"}) {
    const auto lc = config(name);
    std::string outs[2][3];
    for (int t = 0; t < 2; ++t) {
      RunFlags f;
      f.threads = t == 0 ? 1 : 4;
      f.paths = 2000;
      f.steps = 50;
      std::ostringstream p, e, v, m;
      cmd_price(lc, f, p, e);
      cmd_verify(lc, f, {}, v);
      cmd_margin_check(lc, f, m);
      outs[t][0] = p.str();
      outs[t][1] = v.str();
      outs[t][2] = m.str();
    }
    for (int c = 0; c < 3; ++c)
      if (outs[0][c] != outs[1][c]) {
        ok = false;
        detail += std::string(" ") + name + (c == 0 ? " price" : c == 1 ? " verify" : " margin-check") + " differs;";
      }
  }
  report("AC9", ok, "price, verify and margin-check outputs identical for 1 and 4 threads" + detail);
}

}  // namespace

int main() {
  const std::pair<const char*, void (*)()> criteria[] = {{"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3},
                                                         {"AC4", ac4}, {"AC5", ac5}, {"AC6", ac6},
                                                         {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}};
  for (const auto& [id, run] : criteria) {
    try {
      run();
    } catch (const std::exception& e) {
      report(id, false, std::string("threw: ") + e.what());
    }
  }
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
