#include "smpm/rng.hpp"

#include <cmath>

#include "smpm/errors.hpp"

namespace smpm {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : key_(mix64(seed)) {}

void Rng::refill() {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(counter_lo_), static_cast<std::uint32_t>(counter_lo_ >> 32),
      static_cast<std::uint32_t>(counter_hi_), static_cast<std::uint32_t>(counter_hi_ >> 32)};
  block_ = philox4x32_10(ctr, {static_cast<std::uint32_t>(key_),
                               static_cast<std::uint32_t>(key_ >> 32)});
  if (++counter_lo_ == 0) ++counter_hi_;
  block_pos_ = 0;
}

std::uint64_t Rng::next_u64() {
  if (block_pos_ > 2) refill();
  const std::uint64_t value =
      (static_cast<std::uint64_t>(block_[block_pos_]) << 32) | block_[block_pos_ + 1];
  block_pos_ += 2;
  return value;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  require(bound > 0, ErrorCode::kConfiguration, "Rng::below requires a positive bound");
  // Lemire's nearly divisionless rejection method.
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = -bound % bound;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  // Marsaglia polar method.
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * scale;
  has_spare_normal_ = true;
  return u * scale;
}

Rng Rng::split(std::uint64_t id) const {
  Rng child;
  child.key_ = mix64(key_ ^ mix64(id ^ 0x5851F42D4C957F2Dull));
  return child;
}

}  // namespace smpm
