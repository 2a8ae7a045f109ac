#pragma once

#include <cstdint>
#include <random>

#include "gridhss/dense.hpp"

namespace gridhss {

// Deterministic uniform source: std::mt19937_64 (fully specified by the
// standard) with doubles formed from the top 53 bits, so streams are
// bit-identical across platforms and standard-library implementations.
class Rng64 {
 public:
  explicit Rng64(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1).
  double next_unit() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Standard normal via Box-Muller (avoids the unspecified
  // std::normal_distribution).
  double next_normal();

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

Vector random_vector(Index n, Rng64& rng, double lo = -1.0, double hi = 1.0);
Vector random_unit_vector(Index n, Rng64& rng);
Matrix random_matrix(Index rows, Index cols, Rng64& rng, double lo = -1.0,
                     double hi = 1.0);

}  // namespace gridhss
