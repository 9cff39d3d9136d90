#ifndef RSHARE_NUMERICS_HPP
#define RSHARE_NUMERICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rshare {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sum in a fixed pairwise tree order. The result depends only on the input
/// sequence, never on how it was produced.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

struct SampleStats {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

/// Mean and standard error of i.i.d. samples. With `paired`, consecutive
/// entries (antithetic pairs) are averaged first and the pair means are
/// treated as the i.i.d. samples.
inline SampleStats sample_stats(std::span<const double> xs, bool paired = false) {
  std::vector<double> samples;
  if (paired) {
    samples.reserve(xs.size() / 2);
    for (std::size_t i = 0; i + 1 < xs.size(); i += 2) samples.push_back(0.5 * (xs[i] + xs[i + 1]));
  } else {
    samples.assign(xs.begin(), xs.end());
  }
  SampleStats st;
  st.n = samples.size();
  if (st.n == 0) return st;
  st.mean = pairwise_sum(samples) / static_cast<double>(st.n);
  if (st.n < 2) return st;
  std::vector<double> sq(st.n);
  for (std::size_t i = 0; i < st.n; ++i) sq[i] = (samples[i] - st.mean) * (samples[i] - st.mean);
  const double var = pairwise_sum(sq) / static_cast<double>(st.n - 1);
  st.std_error = std::sqrt(var / static_cast<double>(st.n));
  return st;
}

/// Linear-interpolation quantile (type 7) of an unsorted sample.
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const double h = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

/// Runs body(begin, end) over disjoint contiguous chunks of [0, n).
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  if (threads <= 1 || n < 2) {
    body(std::size_t{0}, n);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back([&body, &errors, w, begin, end] {
        try {
          body(begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  // lowest chunk wins so the reported error does not depend on scheduling
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Golden-section search
// ---------------------------------------------------------------------------

struct ScalarOptimum {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
};

/// Maximizes a unimodal function on [a, b] using only a comparison
/// `prefer(x, y) > 0` meaning f(x) > f(y). Callers that can evaluate the
/// difference f(x) - f(y) without cancellation get argmax precision far below
/// sqrt(machine epsilon).
template <class Difference>
double golden_section_argmax_by(Difference&& difference, double a, double b, double tol,
                                int max_iter = 400) {
  constexpr double inv_phi = 0.6180339887498948482;
  if (b < a) std::swap(a, b);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (difference(c, d) > 0.0) {
      b = d;
    } else {
      a = c;
    }
    c = b - inv_phi * (b - a);
    d = a + inv_phi * (b - a);
  }
  return 0.5 * (a + b);
}

/// Maximizes a unimodal function on [a, b].
template <class F>
ScalarOptimum golden_section_max(F&& f, double a, double b, double tol, int max_iter = 400) {
  constexpr double inv_phi = 0.6180339887498948482;
  if (b < a) std::swap(a, b);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  ScalarOptimum out;
  int it = 0;
  for (; it < max_iter && (b - a) > tol; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  out.iterations = it;
  // The interior points, not the bracket ends, are the ones with known values.
  if (fc > fd) {
    out.x = c;
    out.value = fc;
  } else {
    out.x = d;
    out.value = fd;
  }
  const double fa = f(a), fb = f(b);
  if (fa > out.value) out = {a, fa, it};
  if (fb > out.value) out = {b, fb, it};
  return out;
}

// ---------------------------------------------------------------------------
// Brent root finding
// ---------------------------------------------------------------------------

struct RootResult {
  double root = 0.0;
  double f_root = 0.0;
  int evaluations = 0;
};

/// Brent's method on a bracket with f(a) f(b) <= 0. fa and fb are the already
/// known end values, so no evaluations are spent on them here.
template <class F>
RootResult brent_root(F&& f, double a, double b, double fa, double fb, double xtol,
                      int max_eval = 100) {
  if (fa * fb > 0.0) throw SolverError("brent_root: interval does not bracket a root");
  RootResult res;
  if (fa == 0.0) return {a, 0.0, 0};
  if (fb == 0.0) return {b, 0.0, 0};
  double c = a, fc = fa, d = b - a, e = d;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (;;) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * eps * std::abs(b) + 0.5 * xtol;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) {
      res.root = b;
      res.f_root = fb;
      return res;
    }
    if (res.evaluations >= max_eval) throw SolverError("brent_root: evaluation budget exhausted");
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      const double min1 = 3.0 * xm * q - std::abs(tol1 * q);
      const double min2 = std::abs(e * q);
      if (2.0 * p < std::min(min1, min2)) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
    ++res.evaluations;
  }
}

}  // namespace rshare

#endif  // RSHARE_NUMERICS_HPP
