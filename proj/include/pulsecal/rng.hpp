#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace pulsecal {

/// Portable pseudo-random source used by every randomized routine.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Variates are derived here rather than through the
/// std::*_distribution templates because those are implementation-defined
/// and would break cross-toolchain reproducibility:
///   - uniform: top 53 bits of one engine draw, scaled to [0, 1)
///   - normal: Box-Muller on two uniforms, second variate cached
///   - gamma: Marsaglia-Tsang squeeze (with the shape < 1 boost)
///   - Student-t: normal / sqrt(chi-square / df), rescaled to unit variance
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double normal();
  double gamma(double shape);
  // Unit-variance Student-t variate; requires df > 2.
  double student_t_unit(double df);
  // Uniform index in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// splitmix64 finalizer; mixes (master, stream, tag) into an independent seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t tag = 0);

}  // namespace pulsecal
