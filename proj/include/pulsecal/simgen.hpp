#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pulsecal/scorekit.hpp"
#include "pulsecal/series.hpp"

namespace pulsecal::simgen {

struct StreamSpec {
  std::string agent_id = "agent-000";
  double long_run_mean = 0.5;
  double reversion_rate = 0.003;
  double innovation_std = 0.01;
  std::size_t length = 2000;
  double initial_score = 0.5;
  // 0 selects Gaussian innovations; otherwise unit-variance Student-t with this df (> 2).
  double tail_df = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ShiftEvent {
  std::size_t time = 0;  // index of the first shifted point
  double jump = 0.0;
  double innovation_multiplier = 1.0;

  void validate(std::size_t length) const;
};

/// s[t+1] = s[t] + rate * (mean - s[t]) + eps_t, clamped to [0, 1], hours 0..n-1.
ScoreSeries gen_stream(const StreamSpec& spec);

/// Regenerates the stream with a regime change at event.time: the level and
/// the long-run mean move by jump and innovations are scaled by the
/// multiplier from then on. The prefix before the event equals gen_stream(spec).
ScoreSeries gen_stream(const StreamSpec& spec, const ShiftEvent& event);

/// Shifts an existing series: points at and after the event become
/// s[tau] + jump + multiplier * (s[t] - s[tau]), clamped. Earlier points are untouched.
ScoreSeries inject_shift(const ScoreSeries& series, const ShiftEvent& event);

enum class AgentClass { Stable, Volatile };

std::string_view to_string(AgentClass cls);

struct PopulationSpec {
  std::size_t stable_count = 35;
  std::size_t volatile_count = 15;
  std::size_t length = 3000;
  double reversion_rate = 0.003;
  double stable_innovation_std = 0.004;
  double volatile_innovation_std = 0.012;
  double stable_divergence = 0.015;
  double volatile_divergence = 0.08;
  std::size_t platforms = 9;
  double mean_low = 0.35;
  double mean_high = 0.65;
  double tail_df = 0.0;
  double threshold = 0.04;
  std::size_t max_retries = 100;
  // The first released_agents agents get the release event in their stream.
  std::size_t released_agents = 0;
  ShiftEvent release;
  std::uint64_t seed = 0;

  std::size_t agent_count() const { return stable_count + volatile_count; }
  void validate() const;
};

struct Population {
  std::vector<ScoreSeries> series;
  std::vector<scorekit::PlatformScoreSet> platforms;
  std::vector<AgentClass> classes;
  std::vector<double> true_means;
  std::vector<double> sigma_cross;
  std::vector<std::optional<ShiftEvent>> events;
};

/// Stable agents come first, then volatile ones; ids are agent-000, agent-001, ...
/// Every agent draws from its own stream seeded by (seed, index). Platform
/// scores are redrawn until sigma_cross lands on the class's side of the
/// threshold; exhausting max_retries throws InvalidInput.
Population gen_population(const PopulationSpec& spec);

struct ErrorPairs {
  std::vector<double> first;
  std::vector<double> second;
};

/// Gaussian pairs: first = sigma_a z1, second = sigma_b (rho z1 + sqrt(1 - rho^2) z2).
ErrorPairs gen_correlated_errors(double sigma_a, double sigma_b, double rho, std::size_t n,
                                 std::uint64_t seed);

/// Synthetic factor matrix with values in [0.05, 0.95]; each cell is missing
/// with probability missing_rate.
std::vector<scorekit::FactorVector> gen_factor_matrix(std::size_t agents, std::uint64_t seed,
                                                      double missing_rate = 0.0);

std::string agent_name(std::size_t index);

}  // namespace pulsecal::simgen
