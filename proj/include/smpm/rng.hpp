#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace smpm {

// Counter-based generator (Philox4x32-10). A generator is fully described by
// its 64-bit key and 128-bit counter, so independent substreams are obtained
// by deriving new keys rather than by advancing a shared state.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next_u64(); }
  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer on [0, bound); bound > 0.
  std::uint64_t below(std::uint64_t bound);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();

  // Child generator keyed by (this key, id). Does not consume from this stream.
  Rng split(std::uint64_t id) const;

  std::uint64_t key() const { return key_; }

 private:
  void refill();

  std::uint64_t key_;
  std::uint64_t counter_lo_ = 0;
  std::uint64_t counter_hi_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace smpm
