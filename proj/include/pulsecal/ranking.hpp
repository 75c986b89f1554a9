#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pulsecal/conformal.hpp"
#include "pulsecal/interval.hpp"
#include "pulsecal/series.hpp"

namespace pulsecal::ranking {

// Unordered agent pair stored with first < second.
struct PairKey {
  std::string first;
  std::string second;

  static PairKey canonical(const std::string& a, const std::string& b);
  bool operator==(const PairKey&) const = default;
};

enum class Decision { FirstAbove, SecondAbove, Abstain };

std::string_view to_string(Decision decision);

struct RankDecision {
  PairKey pair;
  // score(first) - score(second)
  double delta = 0.0;
  Interval interval;
  double p_value = 1.0;
  Decision decision = Decision::Abstain;
  bool fdr_adjusted = false;
};

struct DeltaCalibrationOptions {
  std::size_t horizon = 24;
  double train_fraction = conformal::kDefaultTrainFraction;
  double reversion_rate = forecast::kDefaultReversionRate;
};

/// Aligns the two histories on shared hours, forms the difference series,
/// fits the mean-reversion forecaster to its training part and returns the
/// h-step residuals whose targets fall in the calibration part.
conformal::CalibrationSet delta_calibration(const ScoreSeries& first, const ScoreSeries& second,
                                            const DeltaCalibrationOptions& options = {});

// Difference series first - second over the shared hours (inner join).
std::vector<double> aligned_difference(const ScoreSeries& first, const ScoreSeries& second);

/// Interval delta +/- q over [-1, 1]; abstains iff it contains zero
/// (endpoints included), otherwise ranks by the sign of delta.
RankDecision abstain_decision(const PairKey& pair, double delta,
                              const conformal::CalibrationSet& cal, double alpha);

// (1 + #{residuals >= |delta|}) / (n + 1).
double conformal_p_value(double delta, const conformal::CalibrationSet& cal);

/// Benjamini-Hochberg step-up at level q. Rejects every p-value no larger
/// than p_(k), k the largest index with p_(k) <= k q / m.
std::vector<bool> benjamini_hochberg(std::span<const double> p_values, double q = 0.20);

enum class LeaderboardMode { PerPairAlpha, Fdr };

std::string_view to_string(LeaderboardMode mode);

struct AgentEntry {
  std::string agent_id;
  double score = 0.0;
  Interval interval;
};

struct LeaderboardRow {
  std::string agent_id;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
  Interval interval;
};

struct AbstentionSummary {
  std::size_t pairs = 0;
  std::size_t ranked = 0;
  std::size_t abstained = 0;
  double overall_rate = 0.0;
  // Pairs with both agents in the top 10.
  double top10_rate = 0.0;
  std::size_t top10_pairs = 0;
  // Per band of 10 ranks: pairs with both agents inside the band.
  std::vector<double> band_rates;
  std::vector<std::size_t> band_pairs;
};

struct Leaderboard {
  LeaderboardMode mode = LeaderboardMode::PerPairAlpha;
  std::vector<LeaderboardRow> rows;
  std::vector<RankDecision> decisions;
  AbstentionSummary summary;
};

/// Sorts agents by score (ties by agent id) and attaches a decision for every
/// unordered pair. In Fdr mode, Benjamini-Hochberg at level q replaces the
/// per-pair interval test. Throws InvalidInput when a pair decision is missing.
Leaderboard build_leaderboard(std::span<const AgentEntry> agents,
                              std::span<const RankDecision> decisions, LeaderboardMode mode,
                              double q = 0.20);

/// Fraction of ranked pairs whose declared direction contradicts the ordering
/// of the supplied true values. nullopt when nothing is ranked.
std::optional<double> false_ranking_rate(std::span<const RankDecision> decisions,
                                         std::span<const std::string> agent_ids,
                                         std::span<const double> true_values);

}  // namespace pulsecal::ranking
