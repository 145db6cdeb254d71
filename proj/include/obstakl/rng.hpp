#pragma once

#include <cmath>
#include <cstdint>

namespace obstakl {

/**
 * Counter-based random stream: the state for draw k of stream (seed, id) is
 * a pure function of (seed, id, k), so path i always sees the same numbers
 * no matter how paths are scheduled across threads.
 *
 * The generator is splitmix64 over a per-stream offset counter. splitmix64
 * is a bijective avalanche mix of a Weyl sequence; it passes BigCrush and is
 * more than adequate for Monte Carlo noise.
 */
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id)
      : ctr_(mix(seed ^ mix(stream_id + 0x9E3779B97F4A7C15ULL))) {}

  std::uint64_t next_u64() {
    ctr_ += 0x9E3779B97F4A7C15ULL;
    return mix(ctr_);
  }

  /** Uniform on (0,1), never exactly 0 or 1. */
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /** Standard normal via Box-Muller (deterministic, libc-independent). */
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_uniform();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t ctr_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace obstakl
