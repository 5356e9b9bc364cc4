#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "actgen/tensor.hpp"

namespace actgen {

/// Deterministic random source. Built on mt19937_64 (whose output stream is
/// fixed by the standard) with hand-rolled uniform/normal transforms, so the
/// same seed yields bit-identical draws on every platform and the full state
/// round-trips through checkpoints.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  double uniform_range(double lo, double hi);

  /// Standard normal via Box-Muller; consumes two uniforms per draw.
  double normal();

  /// Uniform index in [0, n); rejection-sampled, no modulo bias.
  std::size_t index(std::size_t n);

  Tensor gaussian(const std::vector<std::size_t>& shape);
  Tensor uniform_tensor(const std::vector<std::size_t>& shape, double lo, double hi);

  /// Textual engine state, exact round-trip via set_state().
  std::string state() const;
  void set_state(const std::string& s);

  /// Stable sub-seed derivation for independent streams.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 gen_;
};

/// i.i.d. standard normal tensor; identical seed state gives identical bits.
Tensor sample_gaussian(const std::vector<std::size_t>& shape, Rng& rng);

}  // namespace actgen
