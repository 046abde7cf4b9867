#pragma once

#include <cstdint>

namespace mecsp {

/// Counter-based splittable random stream. Stream (seed, counter) is derived
/// by mixing, so replication r and device i can each own an independent
/// stream and parallel runs reproduce serial ones bit for bit.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t counter)
      : state_(mix(mix(seed ^ 0x9e3779b97f4a7c15ULL) + counter)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform double in [0, 1).
  double next_u01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

}  // namespace mecsp
