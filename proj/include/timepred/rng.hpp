#pragma once

#include <cstdint>
#include <initializer_list>

namespace timepred {

/// Derives an independent stream key from a parent seed and a list of tags
/// (family id, replication, dimension, ...). Order of tags matters.
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> tags);

/// Counter-based generator: output i is splitmix64(key + i * golden). Streams
/// for different keys are independent, so every consumer derives its own key
/// instead of sharing generator state.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi] inclusive.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);
  /// Standard normal (Marsaglia polar method, one value cached).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace timepred
