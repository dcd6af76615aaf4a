#pragma once

#include <cstdint>
#include <limits>

namespace tracerecon {

// xoshiro256++ with splitmix64 seeding. One master seed fans out into
// independent substreams, one per trace/trial, so parallel generation is
// order-independent and every experiment is reproducible bit-for-bit.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) { seed_state(seed); }

  Rng(std::uint64_t seed, std::uint64_t stream) {
    seed_state(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<std::uint64_t>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Deterministic child stream; does not advance this generator.
  Rng fork(std::uint64_t stream) const {
    Rng child(s_[0] ^ rotl(s_[2], 29), stream);
    return child;
  }

  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return (*this)() < threshold(p);
  }

  // 64 iid Bernoulli(p) bits packed into one word. p=1/2 is a single draw.
  std::uint64_t bernoulli_word(double p) {
    if (p <= 0.0) return 0;
    if (p >= 1.0) return ~0ULL;
    if (p == 0.5) return (*this)();
    const std::uint64_t thr = threshold(p);
    std::uint64_t w = 0;
    for (int b = 0; b < 64; ++b) w |= static_cast<std::uint64_t>((*this)() < thr) << b;
    return w;
  }

  // Uniform integer in [0, bound).
  std::uint64_t uniform_below(std::uint64_t bound) {
    // Lemire rejection-free-ish: rejection loop keeps it exact.
    const std::uint64_t threshold = (-bound) % bound;
    for (;;) {
      const std::uint64_t r = (*this)();
      __uint128_t m = static_cast<__uint128_t>(r) * bound;
      if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  static std::uint64_t threshold(double p) {
    // P(draw < thr) = thr / 2^64
    const long double scaled = static_cast<long double>(p) * 18446744073709551616.0L;
    if (scaled >= 18446744073709551615.0L) return ~0ULL;
    return static_cast<std::uint64_t>(scaled);
  }

  void seed_state(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s_) {
      x += 0x9E3779B97F4A7C15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      w = z ^ (z >> 31);
    }
    // avoid the all-zero state, however unlikely
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::uint64_t s_[4];
};

}  // namespace tracerecon
