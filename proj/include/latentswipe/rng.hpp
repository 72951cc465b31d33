#pragma once

#include <cstdint>
#include <random>

namespace latentswipe {

// mt19937_64 that counts the number of 64-bit words drawn. The cursor is
// written into session logs so a replay can confirm it consumed the exact
// same stream.
class CountingRng {
 public:
  using result_type = std::uint64_t;

  explicit CountingRng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }

  result_type operator()() {
    ++cursor_;
    return engine_();
  }

  // Uniform double in [0, 1) from the top 53 bits; portable across standard
  // library implementations.
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double low, double high) { return low + (high - low) * uniform01(); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t cursor() const { return cursor_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  std::uint64_t cursor_ = 0;
};

}  // namespace latentswipe
