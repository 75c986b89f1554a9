#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pulsecal/interval.hpp"

namespace pulsecal::scorekit {

enum class Factor : std::size_t { Benchmark = 0, Adoption = 1, Sentiment = 2, Ecosystem = 3 };

inline constexpr std::size_t kFactorCount = 4;
// Value substituted for a missing factor before any composite is formed.
inline constexpr double kMissingFactorValue = 0.5;

struct FactorVector {
  std::array<double, kFactorCount> values{0.5, 0.5, 0.5, 0.5};
  std::array<bool, kFactorCount> missing{false, false, false, false};

  FactorVector() = default;
  FactorVector(double benchmark, double adoption, double sentiment, double ecosystem)
      : values{benchmark, adoption, sentiment, ecosystem} {}

  // Factor value with the missing-mask applied.
  double effective(std::size_t factor) const {
    return missing[factor] ? kMissingFactorValue : values[factor];
  }
  double effective(Factor factor) const { return effective(static_cast<std::size_t>(factor)); }

  void validate() const;
};

struct Weights {
  std::array<double, kFactorCount> values{0.35, 0.25, 0.20, 0.20};

  // The default allocation: benchmark 0.35, adoption 0.25, sentiment 0.20, ecosystem 0.20.
  static Weights standard() { return {}; }

  // Throws InvalidInput on a negative weight or a sum off 1 by more than 1e-9.
  void validate() const;
};

struct PlatformScoreSet {
  std::string agent_id;
  std::map<std::string, double> scores;
};

double composite_score(const FactorVector& factors, const Weights& weights);

// Population (divide-by-n) standard deviation of the per-platform scores.
double cross_source_divergence(const PlatformScoreSet& platforms);

/// Item indices ordered best (highest score) first. Ties keep ascending index
/// order, so callers that index agents by ascending id get id tie-breaking.
std::vector<std::size_t> rank_order(std::span<const double> scores);

/// rank_of[i] = 0-based position of item i in rank_order(scores).
std::vector<std::size_t> rank_positions(std::span<const double> scores);

// (concordant - discordant) / pairs for two orderings of the same item set.
double kendall_tau(std::span<const std::size_t> ranking_a, std::span<const std::size_t> ranking_b);

std::vector<double> composite_scores(std::span<const FactorVector> agents, const Weights& weights);

/// Per-agent count of the 8 single-factor perturbations (each factor weight
/// moved by +delta and -delta, floored at zero, then renormalized) under which
/// the agent's rank moves by more than rank_window positions.
std::vector<int> single_factor_perturbation(std::span<const FactorVector> agents,
                                            const Weights& weights, double delta = 0.10,
                                            int rank_window = 0);

struct TauSummary {
  double median = 0.0;
  double p05 = 0.0;
  double p95 = 0.0;
  std::size_t draws = 0;
};

/// Kendall tau between the base-weight ranking and rankings under weights drawn
/// from Dirichlet(concentration * base_weights), summarized over draws.
TauSummary dirichlet_weight_sensitivity(std::span<const FactorVector> agents,
                                        const Weights& base_weights, double concentration,
                                        std::size_t draws, std::uint64_t seed);

// Percentile bootstrap interval for the mean of the observations.
Interval bootstrap_score_ci(std::span<const double> observations, std::size_t resamples,
                            double level, std::uint64_t seed);

}  // namespace pulsecal::scorekit
