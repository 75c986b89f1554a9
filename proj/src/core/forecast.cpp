#include "pulsecal/forecast.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "pulsecal/error.hpp"
#include "pulsecal/stats.hpp"

namespace pulsecal::forecast {

void ForecastModel::validate(ScoreRange range) const {
  require(std::isfinite(reversion_rate) && reversion_rate >= 0.0, "reversion rate must be >= 0");
  require(std::isfinite(innovation_scale) && innovation_scale >= 0.0,
          "innovation scale must be >= 0");
  require(std::isfinite(long_run_mean) && long_run_mean >= range.lo && long_run_mean <= range.hi,
          "long-run mean outside the score range");
}

ForecastModel estimate_model(std::span<const double> scores, double reversion_rate) {
  require(scores.size() >= 3, "model estimation needs at least three points");
  std::vector<double> diffs(scores.size() - 1);
  for (std::size_t i = 1; i < scores.size(); ++i) {
    diffs[i - 1] = scores[i] - scores[i - 1];
  }
  ForecastModel model;
  model.reversion_rate = reversion_rate;
  model.long_run_mean = stats::mean(scores);
  model.innovation_scale = stats::sample_std(diffs);
  return model;
}

ForecastModel estimate_model(const ScoreSeries& series, double reversion_rate) {
  return estimate_model(series.values(), reversion_rate);
}

double mean_reversion_forecast(double current, const ForecastModel& model, double horizon,
                               ScoreRange range) {
  require(std::isfinite(horizon) && horizon >= 0.0, "forecast horizon must be nonnegative");
  require(std::isfinite(model.reversion_rate) && model.reversion_rate >= 0.0 &&
              model.reversion_rate <= 1.0,
          "reversion rate must lie in [0, 1]");
  const double pull = std::min(model.reversion_rate * horizon, 1.0);
  return range.clamp(current + pull * (model.long_run_mean - current));
}

double normal_multiplier(double level) {
  require(level > 0.0 && level < 1.0, "level must lie in (0, 1)");
  if (std::abs(level - 0.80) < 1e-12) {
    return 1.28;
  }
  return boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);
}

Interval parametric_interval(double forecast, const ForecastModel& model, double horizon,
                             double level, ScoreRange range) {
  require(std::isfinite(horizon) && horizon > 0.0, "interval horizon must be positive");
  model.validate(range);
  const double half_width = normal_multiplier(level) * model.innovation_scale * std::sqrt(horizon);
  Interval out = make_interval(forecast, half_width, level, Method::Parametric, range);
  out.degenerate = model.innovation_scale == 0.0;
  return out;
}

}  // namespace pulsecal::forecast
