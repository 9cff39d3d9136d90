#ifndef RSHARE_RNG_HPP
#define RSHARE_RNG_HPP

#include <cstdint>
#include <limits>
#include <random>

namespace rshare {

namespace detail {
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Stream identifiers. Each consumer of randomness draws from its own
/// substream so that, e.g., default-time sampling never shifts the Brownian
/// increments of a path.
enum class Stream : std::uint64_t { brownian = 1, default_times = 2, oracle = 3 };

/// Counter-based SplitMix64 generator keyed by (seed, stream, index). The
/// draws of substream `index` do not depend on which worker consumes it or in
/// what order substreams are visited.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, Stream stream, std::uint64_t index)
      : counter_(detail::mix64(seed + 0x9e3779b97f4a7c15ULL) ^
                 detail::mix64(static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL) ^
                 detail::mix64(index * 0x8cb92ba72f3d8dd7ULL + 0x2545f4914f6cdd1dULL)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return detail::mix64(counter_);
  }

  /// Uniform on the open interval (0, 1).
  double uniform_open() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() { return normal_(*this); }

 private:
  std::uint64_t counter_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rshare

#endif  // RSHARE_RNG_HPP
