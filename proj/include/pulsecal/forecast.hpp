#pragma once

#include <span>

#include "pulsecal/interval.hpp"
#include "pulsecal/series.hpp"

namespace pulsecal::forecast {

inline constexpr double kDefaultReversionRate = 0.003;

struct ForecastModel {
  double reversion_rate = kDefaultReversionRate;  // per hour
  double long_run_mean = 0.5;
  double innovation_scale = 0.0;  // per sqrt-hour

  void validate(ScoreRange range = kUnitRange) const;
};

/// Long-run mean is the series mean; innovation scale is the sample standard
/// deviation of consecutive differences. Needs at least three points.
ForecastModel estimate_model(std::span<const double> scores,
                             double reversion_rate = kDefaultReversionRate);
ForecastModel estimate_model(const ScoreSeries& series,
                             double reversion_rate = kDefaultReversionRate);

/// current + rate * (mean - current) * h, clamped into range. When rate * h
/// exceeds 1 the forecast stops at the long-run mean instead of overshooting.
double mean_reversion_forecast(double current, const ForecastModel& model, double horizon,
                               ScoreRange range = kUnitRange);

// Two-sided standard-normal multiplier; exactly 1.28 at level 0.80.
double normal_multiplier(double level);

// forecast +/- z(level) * innovation_scale * sqrt(h), clamped.
Interval parametric_interval(double forecast, const ForecastModel& model, double horizon,
                             double level, ScoreRange range = kUnitRange);

}  // namespace pulsecal::forecast
