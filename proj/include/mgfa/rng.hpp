#pragma once

#include <array>
#include <cstdint>

namespace mgfa {

// xoroshiro128++ (Blackman & Vigna). Used instead of a std engine because
// its whole state is 16 bytes, which is exactly what the checkpoint format
// serializes, and its output is identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t x = seed;
    state_[0] = splitmix64(x);
    x += 0x632BE59BD9B4E019ULL * (stream + 1);
    state_[1] = splitmix64(x);
    if (state_[0] == 0 && state_[1] == 0) state_[1] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t s0 = state_[0];
    std::uint64_t s1 = state_[1];
    const std::uint64_t result = rotl(s0 + s1, 17) + s0;
    s1 ^= s0;
    state_[0] = rotl(s0, 49) ^ s1 ^ (s1 << 21);
    state_[1] = rotl(s1, 28);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::array<std::uint8_t, 16> state() const {
    std::array<std::uint8_t, 16> out{};
    for (int w = 0; w < 2; ++w)
      for (int i = 0; i < 8; ++i)
        out[static_cast<std::size_t>(8 * w + i)] =
            static_cast<std::uint8_t>(state_[w] >> (8 * i));
    return out;
  }

  void set_state(const std::array<std::uint8_t, 16>& bytes) {
    for (int w = 0; w < 2; ++w) {
      std::uint64_t v = 0;
      for (int i = 7; i >= 0; --i)
        v = (v << 8) | bytes[static_cast<std::size_t>(8 * w + i)];
      state_[w] = v;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_[2];
};

}  // namespace mgfa
