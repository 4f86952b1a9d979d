#pragma once

// SplitMix64: seedable, splittable 64-bit generator (Steele, Lea & Flood,
// "Fast splittable pseudorandom number generators").  Every stochastic
// operation in the library takes one of these explicitly, so an experiment is
// reproducible bit-for-bit from its seed.  split(key) derives an independent
// child stream purely from the current state and the key, which gives
// deterministic per-trial / per-block streams regardless of thread count.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace mra {

class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed, uint64_t stream = 0)
      : state_(mix(seed + 0x9e3779b97f4a7c15ull)),
        gamma_((mix(seed ^ (stream + 0xbf58476d1ce4e5b9ull)) | 1ull)) {}

  uint64_t next_u64() {
    state_ += gamma_;
    return mix(state_);
  }

  // Independent child stream; pure in (current state, key).
  SplitMix64 split(uint64_t key) const {
    SplitMix64 child(0);
    child.state_ = mix(state_ ^ mix(key + 0x94d049bb133111ebull));
    child.gamma_ = mix(child.state_ ^ (gamma_ + key)) | 1ull;
    child.spare_valid_ = false;
    return child;
  }

  // Uniform on [0, 1) with 53 random bits.
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("next_below: n must be positive");
    // Rejection to remove modulo bias.
    uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via Box-Muller; the spare deviate is cached.
  double next_normal() {
    if (spare_valid_) {
      spare_valid_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    spare_valid_ = true;
    return r * std::cos(a);
  }

  void fill_normal(double* out, size_t count) {
    for (size_t i = 0; i < count; ++i) out[i] = next_normal();
  }

  // Index sample from a cumulative distribution (cdf.back() ~= 1).
  int sample_cdf(const std::vector<double>& cdf) {
    double u = next_double();
    int lo = 0, hi = static_cast<int>(cdf.size()) - 1;
    while (lo < hi) {
      int mid = (lo + hi) / 2;
      if (cdf[mid] <= u)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  }

 private:
  static uint64_t mix(uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  uint64_t state_;
  uint64_t gamma_;
  double spare_ = 0.0;
  bool spare_valid_ = false;
};

}  // namespace mra
