#ifndef PFL_NUM_RNG_HPP
#define PFL_NUM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "pfl/common.hpp"

namespace pfl::num {

// Splittable deterministic generator. A stream is identified by a 64-bit key;
// substream(id) derives a new key by hashing, so (trial, particle, ...) paths
// map to statistically independent streams without coordination.
//
// Draw order is fully specified here (no std::*_distribution), so a given
// seed and call sequence produce the same values on every build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ kDomain)), engine_(key_) {}

  // Derived stream for a child unit of work. Chainable.
  Rng substream(std::uint64_t id) const { return Rng(mix(key_ + 0x9e3779b97f4a7c15ull * (id + 1))); }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal, Marsaglia polar method with one cached value.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // Exponential with the given rate (mean 1/rate).
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  Matrix normal_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  Matrix uniform_matrix(Index rows, Index cols, double lo = 0.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = uniform(lo, hi);
    return m;
  }

  std::uint64_t key() const { return key_; }

 private:
  static constexpr std::uint64_t kDomain = 0x5b1ce5f7d2c4a9e3ull;

  // splitmix64 finalizer; bijective 64-bit mix.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pfl::num

#endif  // PFL_NUM_RNG_HPP
