#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pulsecal/forecast.hpp"
#include "pulsecal/interval.hpp"
#include "pulsecal/series.hpp"

namespace pulsecal::conformal {

inline constexpr double kDefaultTrainFraction = 0.7;

// Sorted nonnegative nonconformity residuals. Immutable once built.
class CalibrationSet {
 public:
  CalibrationSet() = default;
  // Sorts the residuals; throws InvalidInput on a negative or non-finite value.
  explicit CalibrationSet(std::vector<double> residuals, double train_fraction = kDefaultTrainFraction);

  std::span<const double> residuals() const { return residuals_; }
  std::size_t size() const { return residuals_.size(); }
  bool empty() const { return residuals_.empty(); }
  double train_fraction() const { return train_fraction_; }

  // Union of several sets (used for pooled and per-stratum calibration).
  static CalibrationSet pooled(std::span<const CalibrationSet> parts);

 private:
  std::vector<double> residuals_;
  double train_fraction_ = kDefaultTrainFraction;
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t calibration = 0;
};

/// Chronological split: the first floor(n * fraction) points train, the rest
/// calibrate. Throws when either side would be empty.
SplitCounts split_counts(std::size_t n, double train_fraction = kDefaultTrainFraction);
std::pair<ScoreSeries, ScoreSeries> split_history(const ScoreSeries& series,
                                                  double train_fraction = kDefaultTrainFraction);

CalibrationSet nonconformity_scores(std::span<const double> actuals,
                                    std::span<const double> forecasts);

/// Signed h-step residuals s[j] - forecast(s[j - h]) for targets j in
/// [target_begin, target_end); targets with j < h are skipped.
std::vector<double> horizon_residuals(std::span<const double> scores, std::size_t target_begin,
                                      std::size_t target_end, std::size_t horizon,
                                      const forecast::ForecastModel& model,
                                      ScoreRange range = kUnitRange);

// Absolute counterpart of horizon_residuals, packaged as a calibration set.
CalibrationSet horizon_calibration(std::span<const double> scores, std::size_t target_begin,
                                   std::size_t target_end, std::size_t horizon,
                                   const forecast::ForecastModel& model,
                                   ScoreRange range = kUnitRange);

struct QuantileResult {
  double value = 0.0;
  bool unbounded = false;
};

// k = ceil((1 - alpha) * (n + 1)); the 1-based order statistic the quantile uses.
std::size_t conformal_rank(std::size_t n, double alpha);

QuantileResult conformal_quantile(const CalibrationSet& cal, double alpha);
// Same rule over residuals already sorted ascending.
QuantileResult conformal_quantile_sorted(std::span<const double> sorted, double alpha);

Interval conformal_interval(double forecast, const CalibrationSet& cal, double alpha,
                            ScoreRange range = kUnitRange, Method method = Method::SplitConformal);

// ---------------------------------------------------------------------------
// Adaptive conformal inference
// ---------------------------------------------------------------------------

inline constexpr double kDefaultAciStep = 0.01;

struct AciState {
  double working_alpha = 0.2;
  double initial_alpha = 0.2;
  double target_alpha = 0.2;
  double step_size = kDefaultAciStep;
  std::size_t errors = 0;
  std::size_t steps = 0;
  // Compensated (Neumaier) running sum behind working_alpha.
  double head = 0.2;
  double carry = 0.0;

  static AciState start(double target_alpha, double step_size = kDefaultAciStep);

  // alpha_1 + gamma * (t * alpha - sum err); equals working_alpha up to rounding.
  double telescoped_alpha() const;
  double empirical_miscoverage() const {
    return steps == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(steps);
  }
};

// alpha_{t+1} = alpha_t + gamma * (alpha - err_t). The working level is not clamped.
AciState aci_step(AciState state, bool covered);

/// Split-conformal interval at the working level. A working level <= 0 gives
/// the full range, >= 1 a zero-width interval at the forecast.
Interval aci_interval(double forecast, const CalibrationSet& cal, const AciState& state,
                      ScoreRange range = kUnitRange);
Interval aci_interval_sorted(double forecast, std::span<const double> sorted,
                             const AciState& state, ScoreRange range = kUnitRange);

struct AciOptions {
  double step_size = kDefaultAciStep;
  std::size_t horizon = 1;
  // Slide the calibration window over newly revealed residuals.
  bool recalibrate = true;
};

/// Online ACI over a stream with h-step delayed feedback. The interval issued
/// at step t targets step t + h; its outcome is revealed (and the working
/// level updated) when reveal(t + h, actual) is called.
class AciRunner {
 public:
  // The window ages out the initial residuals smallest first (no time order is known).
  AciRunner(const CalibrationSet& initial, double target_alpha, AciOptions options = {},
            ScoreRange range = kUnitRange);
  // Initial absolute residuals in time order; the window ages them out oldest first.
  AciRunner(std::span<const double> chronological, double target_alpha, AciOptions options = {},
            ScoreRange range = kUnitRange);

  // Reveals the interval issued at step - horizon, if any. Returns its covered flag.
  std::optional<bool> reveal(std::size_t step, double actual);
  Interval issue(std::size_t step, double forecast);

  const AciState& state() const { return state_; }
  std::size_t window_size() const { return sorted_.size(); }

 private:
  struct Pending {
    Interval interval;
    double forecast = 0.0;
  };

  void push_residual(double residual);

  AciState state_;
  AciOptions options_;
  ScoreRange range_;
  std::deque<double> window_;
  std::vector<double> sorted_;
  std::map<std::size_t, Pending> pending_;
};

// ---------------------------------------------------------------------------
// Mondrian (group-conditional) calibration
// ---------------------------------------------------------------------------

inline constexpr double kDefaultStratumThreshold = 0.04;

enum class Stratum { Stable, Volatile };

std::string_view to_string(Stratum stratum);

struct AgentResiduals {
  std::string agent_id;
  std::vector<double> residuals;
  double sigma_cross = 0.0;
};

/// Stable (sigma_cross < threshold) and volatile calibration sets. An empty
/// stratum is served by the pooled set and flagged.
class StratumMap {
 public:
  StratumMap(double threshold, std::map<std::string, Stratum> assignment, CalibrationSet stable,
             CalibrationSet volatile_set, CalibrationSet pooled, bool stable_fallback,
             bool volatile_fallback);

  double threshold() const { return threshold_; }
  Stratum stratum_of(const std::string& agent_id) const;
  const CalibrationSet& calibration(Stratum stratum) const;
  const CalibrationSet& calibration_for(const std::string& agent_id) const {
    return calibration(stratum_of(agent_id));
  }
  const CalibrationSet& pooled() const { return pooled_; }
  bool fell_back(Stratum stratum) const {
    return stratum == Stratum::Stable ? stable_fallback_ : volatile_fallback_;
  }
  const std::map<std::string, Stratum>& assignment() const { return assignment_; }

 private:
  double threshold_;
  std::map<std::string, Stratum> assignment_;
  CalibrationSet stable_;
  CalibrationSet volatile_;
  CalibrationSet pooled_;
  bool stable_fallback_;
  bool volatile_fallback_;
};

Stratum classify(double sigma_cross, double threshold = kDefaultStratumThreshold);

StratumMap mondrian_calibrate(std::span<const AgentResiduals> agents,
                              double threshold = kDefaultStratumThreshold);

// ---------------------------------------------------------------------------
// Coverage evaluation
// ---------------------------------------------------------------------------

struct CoverageRow {
  std::string group;
  std::size_t n = 0;
  double coverage = 0.0;
  double mean_width = 0.0;
};

/// Empirical coverage and mean width per group key, in order of first
/// appearance. Groups without observations never appear.
std::vector<CoverageRow> coverage_report(std::span<const Interval> intervals,
                                         std::span<const double> actuals,
                                         std::span<const std::string> groups);

// ---------------------------------------------------------------------------
// Bootstrap baseline
// ---------------------------------------------------------------------------

struct ResidualBand {
  double lower_offset = 0.0;
  double upper_offset = 0.0;
};

/// For each resample of the signed residuals, take its (1-level)/2 and
/// (1+level)/2 empirical quantiles; the band is the median of each across
/// resamples. One band per requested level, all from the same resamples.
std::vector<ResidualBand> bootstrap_residual_bands(std::span<const double> signed_residuals,
                                                   std::size_t resamples,
                                                   std::span<const double> levels,
                                                   std::uint64_t seed);

Interval band_interval(double forecast, const ResidualBand& band, double level,
                       ScoreRange range = kUnitRange);

/// Bootstrap interval for the score h steps after the end of history: the
/// mean-reversion forecast from the last point plus a band built from all
/// h-step residuals in the history.
Interval bootstrap_interval(const ScoreSeries& history, std::size_t horizon,
                            std::size_t resamples, double level, std::uint64_t seed,
                            double reversion_rate = forecast::kDefaultReversionRate);

}  // namespace pulsecal::conformal
