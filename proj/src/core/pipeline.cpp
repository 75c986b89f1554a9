#include "pulsecal/pipeline.hpp"

#include <cmath>

#include "pulsecal/error.hpp"
#include "pulsecal/rng.hpp"
#include "pulsecal/simgen.hpp"
#include "pulsecal/stats.hpp"

namespace pulsecal::pipeline {

std::string_view to_string(Composition rule) {
  return rule == Composition::Additive ? "additive" : "multiplicative";
}

Composition parse_composition(std::string_view text) {
  if (text == "additive") {
    return Composition::Additive;
  }
  if (text == "multiplicative") {
    return Composition::Multiplicative;
  }
  throw InvalidInput("unknown composition rule '" + std::string(text) + "'");
}

void PipelineSimConfig::validate() const {
  require(std::isfinite(rho) && rho >= -1.0 && rho <= 1.0, "correlation must lie in [-1, 1]");
  require(sigma_first >= 0.0 && sigma_second >= 0.0, "stage sigmas must be nonnegative");
  require(samples >= 2, "simulation needs at least two samples");
}

namespace {

void check_stages(std::span<const StageUncertainty> stages) {
  require(stages.size() >= 2, "pipeline bounds need at least two stages");
  for (const auto& stage : stages) {
    require(std::isfinite(stage.sigma) && stage.sigma >= 0.0,
            "stage '" + stage.stage_id + "' has a negative sigma");
  }
}

}  // namespace

double independence_bound(std::span<const StageUncertainty> stages) {
  check_stages(stages);
  double sum_sq = 0.0;
  for (const auto& stage : stages) {
    sum_sq += stage.sigma * stage.sigma;
  }
  return std::sqrt(sum_sq);
}

double worst_case_bound(std::span<const StageUncertainty> stages) {
  check_stages(stages);
  double sum = 0.0;
  for (const auto& stage : stages) {
    sum += stage.sigma;
  }
  return sum;
}

double additive_sigma(double sigma_first, double sigma_second, double rho) {
  const double var = sigma_first * sigma_first + sigma_second * sigma_second +
                     2.0 * rho * sigma_first * sigma_second;
  return std::sqrt(std::max(var, 0.0));
}

double simulate_pipeline_sigma(const PipelineSimConfig& config) {
  config.validate();
  const auto errors = simgen::gen_correlated_errors(config.sigma_first, config.sigma_second,
                                                    config.rho, config.samples, config.seed);
  std::vector<double> composed(config.samples);
  for (std::size_t i = 0; i < config.samples; ++i) {
    const double a = errors.first[i];
    const double b = errors.second[i];
    composed[i] = config.rule == Composition::Additive ? a + b : (1.0 + a) * (1.0 + b) - 1.0;
  }
  return stats::population_std(composed);
}

std::vector<SweepRow> bound_tightness_sweep(double sigma_first, double sigma_second,
                                            std::span<const double> rho_grid, Composition rule,
                                            std::size_t samples, std::uint64_t seed) {
  require(!rho_grid.empty(), "rho grid is empty");
  const StageUncertainty stages[] = {{"stage-1", sigma_first}, {"stage-2", sigma_second}};
  const double independence = independence_bound(stages);
  const double worst_case = worst_case_bound(stages);
  std::vector<SweepRow> rows;
  rows.reserve(rho_grid.size());
  for (std::size_t i = 0; i < rho_grid.size(); ++i) {
    PipelineSimConfig config;
    config.sigma_first = sigma_first;
    config.sigma_second = sigma_second;
    config.rho = rho_grid[i];
    config.samples = samples;
    config.rule = rule;
    config.seed = derive_seed(seed, i, 0x5069);
    rows.push_back(SweepRow{rho_grid[i], simulate_pipeline_sigma(config), independence,
                            worst_case, samples});
  }
  return rows;
}

}  // namespace pulsecal::pipeline
