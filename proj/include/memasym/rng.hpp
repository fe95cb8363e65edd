#ifndef MEMASYM_RNG_HPP
#define MEMASYM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "memasym/linalg.hpp"

namespace memasym {

// Seeded generator whose output stream is identical on every platform.
// std::mt19937_64 is bit-specified by the standard; the standard
// distributions are not, so the conversions to doubles live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform on (0, 1], safe to pass to log.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double exponential() { return -std::log(uniform_open()); }

  // Uniform point of the simplex via normalized exponential spacings, then
  // shrunk into the floor-interior {p : p_k >= floor}.
  Vector simplex_point(int n, double floor = 0.0) {
    Vector p(n);
    for (int k = 0; k < n; ++k) p(k) = exponential();
    p /= p.sum();
    return Vector::Constant(n, floor) + (1.0 - n * floor) * p;
  }

  // Nonzero vector with zero component sum, entries drawn from [-1, 1] and
  // then mean-centred.
  Vector zero_sum_vector(int n) {
    Vector d(n);
    for (;;) {
      for (int k = 0; k < n; ++k) d(k) = uniform(-1.0, 1.0);
      d.array() -= d.mean();
      if (d.cwiseAbs().maxCoeff() > 1e-6) return d;
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace memasym

#endif  // MEMASYM_RNG_HPP
