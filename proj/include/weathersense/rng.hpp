#pragma once

#include <cmath>
#include <cstdint>

#include "weathersense/common.hpp"

namespace weathersense {

// SplitMix64 finalizer. Good avalanche, cheap, and stateless.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based random stream. A stream is identified by a key derived from
// the seed plus any number of sub-stream ids, so independent streams for
// (frame, channel, scatterer, ...) can be split off without shared state.
// Outputs depend only on (key, draw index): generation order across threads
// cannot change the values a given stream produces.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(splitmix64(seed ^ 0xa076'1d64'78bd'642fULL)) {}

  // Derive an independent child stream.
  [[nodiscard]] Rng derive(std::uint64_t id) const {
    Rng child(*this);
    child.key_ = splitmix64(key_ ^ splitmix64(id + 0x1234'5678'9abc'def0ULL));
    child.counter_ = 0;
    child.have_cached_gauss_ = false;
    return child;
  }

  [[nodiscard]] Rng derive(std::uint64_t a, std::uint64_t b) const { return derive(a).derive(b); }
  [[nodiscard]] Rng derive(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
    return derive(a).derive(b).derive(c);
  }

  std::uint64_t next_u64() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  // Standard normal via Box-Muller; pairs are cached.
  double next_gaussian() {
    if (have_cached_gauss_) {
      have_cached_gauss_ = false;
      return cached_gauss_;
    }
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    cached_gauss_ = r * std::sin(a);
    have_cached_gauss_ = true;
    return r * std::cos(a);
  }

  double gaussian(double mean, double std_dev) { return mean + std_dev * next_gaussian(); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_gauss_ = 0.0;
  bool have_cached_gauss_ = false;
};

}  // namespace weathersense
