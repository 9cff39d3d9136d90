#ifndef RSHARE_PIECEWISE_HPP
#define RSHARE_PIECEWISE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rshare {

/// Right-continuous piecewise-constant function of time on [0, inf).
/// values[i] holds on [times[i], times[i+1]); the last value extends to
/// infinity. times[0] must be 0.
class PiecewiseConstant {
 public:
  PiecewiseConstant() : times_{0.0}, values_{0.0} {}
  /*implicit*/ PiecewiseConstant(double constant) : times_{0.0}, values_{constant} {}

  PiecewiseConstant(std::vector<double> times, std::vector<double> values)
      : times_(std::move(times)), values_(std::move(values)) {
    if (times_.empty() || times_.size() != values_.size())
      throw std::invalid_argument("piecewise: times and values must be non-empty and of equal size");
    if (times_.front() != 0.0) throw std::invalid_argument("piecewise: first breakpoint must be 0");
    for (std::size_t i = 1; i < times_.size(); ++i)
      if (!(times_[i] > times_[i - 1]))
        throw std::invalid_argument("piecewise: breakpoints must be strictly increasing");
    for (double v : values_)
      if (!std::isfinite(v)) throw std::invalid_argument("piecewise: values must be finite");
  }

  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }

  double operator()(double t) const { return values_[segment(t)]; }

  bool is_constant() const {
    return std::all_of(values_.begin(), values_.end(), [&](double v) { return v == values_.front(); });
  }
  bool is_zero() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
  }
  double min_value() const { return *std::min_element(values_.begin(), values_.end()); }
  double max_value() const { return *std::max_element(values_.begin(), values_.end()); }

  /// Exact integral over [0, t].
  double integral(double t) const {
    if (t <= 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < times_.size(); ++i) {
      const double lo = times_[i];
      if (lo >= t) break;
      const double hi = (i + 1 < times_.size()) ? std::min(times_[i + 1], t) : t;
      acc += values_[i] * (hi - lo);
    }
    return acc;
  }

  double integral(double a, double b) const { return integral(b) - integral(a); }

  /// Smallest t with integral(t) = level, for a nonnegative function.
  /// Returns +inf when the cumulative integral never reaches the level.
  double inverse_integral(double level) const {
    if (level <= 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < times_.size(); ++i) {
      const double lo = times_[i];
      const bool last = i + 1 == times_.size();
      const double width = last ? std::numeric_limits<double>::infinity() : times_[i + 1] - lo;
      const double rate = values_[i];
      if (rate > 0.0) {
        const double need = (level - acc) / rate;
        if (need <= width) return lo + need;
      }
      if (last) break;
      acc += rate * width;
    }
    return std::numeric_limits<double>::infinity();
  }

  /// Breakpoints strictly inside (a, b).
  std::vector<double> breakpoints_in(double a, double b) const {
    std::vector<double> out;
    for (double t : times_)
      if (t > a && t < b) out.push_back(t);
    return out;
  }

 private:
  std::size_t segment(double t) const {
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return 0;
    return static_cast<std::size_t>(std::distance(times_.begin(), it) - 1);
  }

  std::vector<double> times_;
  std::vector<double> values_;
};

}  // namespace rshare

#endif  // RSHARE_PIECEWISE_HPP
