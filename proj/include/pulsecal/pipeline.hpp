#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pulsecal::pipeline {

struct StageUncertainty {
  std::string stage_id;
  double sigma = 0.0;
};

enum class Composition { Additive, Multiplicative };

std::string_view to_string(Composition rule);
Composition parse_composition(std::string_view text);

struct PipelineSimConfig {
  double sigma_first = 0.0;
  double sigma_second = 0.0;
  double rho = 0.0;
  std::size_t samples = 100000;
  Composition rule = Composition::Additive;
  std::uint64_t seed = 0;

  void validate() const;
};

// Root-sum-of-squares of stage sigmas; needs two or more stages.
double independence_bound(std::span<const StageUncertainty> stages);
// Plain sum of stage sigmas; needs two or more stages.
double worst_case_bound(std::span<const StageUncertainty> stages);

// sqrt(s1^2 + s2^2 + 2 rho s1 s2), the exact sigma of an additive two-stage sum.
double additive_sigma(double sigma_first, double sigma_second, double rho);

/// Population std of composed errors from correlated Gaussian stage errors.
/// Additive: e1 + e2. Multiplicative: (1 + e1)(1 + e2) - 1.
double simulate_pipeline_sigma(const PipelineSimConfig& config);

struct SweepRow {
  double rho = 0.0;
  double empirical_sigma = 0.0;
  double independence_bound = 0.0;
  double worst_case_bound = 0.0;
  std::size_t samples = 0;
};

/// One simulated row per rho; row i draws from a seed derived from (seed, i).
std::vector<SweepRow> bound_tightness_sweep(double sigma_first, double sigma_second,
                                            std::span<const double> rho_grid, Composition rule,
                                            std::size_t samples, std::uint64_t seed);

}  // namespace pulsecal::pipeline
