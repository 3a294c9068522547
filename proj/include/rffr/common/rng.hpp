#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string_view>

namespace rffr {

// Deterministic random source. The std distributions are implementation
// defined, so sampling is done here from raw engine output to keep every
// artifact reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n);

  double normal();

  /// Normal(0, std) truncated to [-2 std, 2 std].
  double truncated_normal(double std);

  bool bernoulli(double p) { return uniform() < p; }

  /// Fisher-Yates shuffle driven by uniform_int.
  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = uniform_int(i);
      std::iter_swap(first + (i - 1), first + j);
    }
  }

  /// Child generator whose stream depends only on this seed state and `tag`.
  Rng fork(std::string_view tag);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Stable 64-bit mix of a seed and a string tag (FNV-1a + splitmix finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

}  // namespace rffr
