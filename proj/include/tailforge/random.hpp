#pragma once

#include <cstdint>

namespace tailforge {

// Counter-based uniform generator: the i-th draw of a stream depends only on
// (seed, i), so replications can be generated independently and in any order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  // Raw 64-bit output for counter i.
  std::uint64_t bits(std::uint64_t i) const {
    return mix(key_ + (i + 1) * 0x9e3779b97f4a7c15ULL) ^ mix(i ^ key_);
  }

  // Uniform on the open interval (0, 1).
  double uniform(std::uint64_t i) const {
    return (static_cast<double>(bits(i) >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

}  // namespace tailforge
