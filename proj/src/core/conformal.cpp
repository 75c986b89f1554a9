#include "pulsecal/conformal.hpp"

#include <algorithm>
#include <cmath>

#include "pulsecal/error.hpp"
#include "pulsecal/rng.hpp"
#include "pulsecal/stats.hpp"

namespace pulsecal::conformal {

CalibrationSet::CalibrationSet(std::vector<double> residuals, double train_fraction)
    : residuals_(std::move(residuals)), train_fraction_(train_fraction) {
  for (double r : residuals_) {
    require(std::isfinite(r) && r >= 0.0, "nonconformity residuals must be finite and >= 0");
  }
  std::sort(residuals_.begin(), residuals_.end());
}

CalibrationSet CalibrationSet::pooled(std::span<const CalibrationSet> parts) {
  std::vector<double> all;
  double fraction = kDefaultTrainFraction;
  for (const auto& part : parts) {
    all.insert(all.end(), part.residuals().begin(), part.residuals().end());
    fraction = part.train_fraction();
  }
  return CalibrationSet(std::move(all), fraction);
}

SplitCounts split_counts(std::size_t n, double train_fraction) {
  require(train_fraction > 0.0 && train_fraction < 1.0, "train fraction must lie in (0, 1)");
  const auto train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
  require(train >= 1 && train < n, "split leaves an empty train or calibration segment");
  return SplitCounts{train, n - train};
}

std::pair<ScoreSeries, ScoreSeries> split_history(const ScoreSeries& series,
                                                  double train_fraction) {
  const auto counts = split_counts(series.size(), train_fraction);
  auto slice = [&](std::size_t begin, std::size_t end) {
    ScoreSeries part;
    part.agent_id = series.agent_id;
    part.hours.assign(series.hours.begin() + static_cast<std::ptrdiff_t>(begin),
                      series.hours.begin() + static_cast<std::ptrdiff_t>(end));
    part.scores.assign(series.scores.begin() + static_cast<std::ptrdiff_t>(begin),
                       series.scores.begin() + static_cast<std::ptrdiff_t>(end));
    return part;
  };
  return {slice(0, counts.train), slice(counts.train, series.size())};
}

CalibrationSet nonconformity_scores(std::span<const double> actuals,
                                    std::span<const double> forecasts) {
  require(actuals.size() == forecasts.size(), "actuals and forecasts differ in length");
  require(!actuals.empty(), "nonconformity scores need at least one pair");
  std::vector<double> residuals(actuals.size());
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    residuals[i] = std::abs(actuals[i] - forecasts[i]);
  }
  return CalibrationSet(std::move(residuals));
}

std::vector<double> horizon_residuals(std::span<const double> scores, std::size_t target_begin,
                                      std::size_t target_end, std::size_t horizon,
                                      const forecast::ForecastModel& model, ScoreRange range) {
  require(horizon >= 1, "horizon must be at least one step");
  require(target_begin <= target_end && target_end <= scores.size(), "target window out of range");
  std::vector<double> residuals;
  residuals.reserve(target_end - target_begin);
  const double h = static_cast<double>(horizon);
  for (std::size_t j = std::max(target_begin, horizon); j < target_end; ++j) {
    const double predicted = forecast::mean_reversion_forecast(scores[j - horizon], model, h, range);
    residuals.push_back(scores[j] - predicted);
  }
  return residuals;
}

CalibrationSet horizon_calibration(std::span<const double> scores, std::size_t target_begin,
                                   std::size_t target_end, std::size_t horizon,
                                   const forecast::ForecastModel& model, ScoreRange range) {
  auto residuals = horizon_residuals(scores, target_begin, target_end, horizon, model, range);
  for (double& r : residuals) {
    r = std::abs(r);
  }
  return CalibrationSet(std::move(residuals));
}

std::size_t conformal_rank(std::size_t n, double alpha) {
  return static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(n + 1)));
}

QuantileResult conformal_quantile_sorted(std::span<const double> sorted, double alpha) {
  require(!sorted.empty(), "conformal quantile needs a nonempty calibration set");
  require(alpha > 0.0 && alpha < 1.0, "miscoverage must lie in (0, 1)");
  const std::size_t k = conformal_rank(sorted.size(), alpha);
  if (k > sorted.size()) {
    return QuantileResult{0.0, true};
  }
  return QuantileResult{sorted[k - 1], false};
}

QuantileResult conformal_quantile(const CalibrationSet& cal, double alpha) {
  return conformal_quantile_sorted(cal.residuals(), alpha);
}

Interval conformal_interval(double forecast, const CalibrationSet& cal, double alpha,
                            ScoreRange range, Method method) {
  const auto q = conformal_quantile(cal, alpha);
  if (q.unbounded) {
    return full_range_interval(forecast, 1.0 - alpha, method, range);
  }
  return make_interval(forecast, q.value, 1.0 - alpha, method, range);
}

std::vector<CoverageRow> coverage_report(std::span<const Interval> intervals,
                                         std::span<const double> actuals,
                                         std::span<const std::string> groups) {
  require(intervals.size() == actuals.size() && intervals.size() == groups.size(),
          "coverage inputs are not aligned");
  std::vector<CoverageRow> rows;
  std::map<std::string, std::size_t> index;
  std::vector<std::size_t> hits;
  std::vector<double> width_sum;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    auto [it, inserted] = index.try_emplace(groups[i], rows.size());
    if (inserted) {
      rows.push_back(CoverageRow{groups[i], 0, 0.0, 0.0});
      hits.push_back(0);
      width_sum.push_back(0.0);
    }
    const std::size_t g = it->second;
    ++rows[g].n;
    hits[g] += intervals[i].contains(actuals[i]) ? 1 : 0;
    width_sum[g] += intervals[i].width();
  }
  for (std::size_t g = 0; g < rows.size(); ++g) {
    const auto n = static_cast<double>(rows[g].n);
    rows[g].coverage = static_cast<double>(hits[g]) / n;
    rows[g].mean_width = width_sum[g] / n;
  }
  return rows;
}

std::vector<ResidualBand> bootstrap_residual_bands(std::span<const double> signed_residuals,
                                                   std::size_t resamples,
                                                   std::span<const double> levels,
                                                   std::uint64_t seed) {
  require(resamples >= 100, "bootstrap needs at least 100 resamples");
  require(signed_residuals.size() >= 2, "insufficient history for bootstrap residuals");
  for (double level : levels) {
    require(level > 0.0 && level < 1.0, "level must lie in (0, 1)");
  }
  const std::size_t n = signed_residuals.size();
  Rng rng(seed);
  std::vector<std::vector<double>> lowers(levels.size(), std::vector<double>(resamples));
  std::vector<std::vector<double>> uppers(levels.size(), std::vector<double>(resamples));
  std::vector<double> sample(n);
  for (std::size_t b = 0; b < resamples; ++b) {
    for (auto& x : sample) {
      x = signed_residuals[rng.index(n)];
    }
    std::sort(sample.begin(), sample.end());
    for (std::size_t l = 0; l < levels.size(); ++l) {
      lowers[l][b] = stats::quantile_sorted(sample, (1.0 - levels[l]) / 2.0);
      uppers[l][b] = stats::quantile_sorted(sample, (1.0 + levels[l]) / 2.0);
    }
  }
  std::vector<ResidualBand> bands;
  bands.reserve(levels.size());
  for (std::size_t l = 0; l < levels.size(); ++l) {
    bands.push_back(ResidualBand{stats::quantile(std::move(lowers[l]), 0.5),
                                 stats::quantile(std::move(uppers[l]), 0.5)});
  }
  return bands;
}

Interval band_interval(double forecast, const ResidualBand& band, double level, ScoreRange range) {
  Interval out;
  out.center = range.clamp(forecast);
  out.lower = std::min(range.clamp(forecast + band.lower_offset), out.center);
  out.upper = std::max(range.clamp(forecast + band.upper_offset), out.center);
  out.level = level;
  out.method = Method::Bootstrap;
  out.degenerate = out.lower == out.upper;
  return out;
}

Interval bootstrap_interval(const ScoreSeries& history, std::size_t horizon,
                            std::size_t resamples, double level, std::uint64_t seed,
                            double reversion_rate) {
  require(horizon >= 1, "horizon must be at least one step");
  require(history.size() >= std::max<std::size_t>(3, horizon + 2),
          "insufficient history for bootstrap residuals");
  const auto model = forecast::estimate_model(history, reversion_rate);
  const auto residuals =
      horizon_residuals(history.values(), horizon, history.size(), horizon, model);
  const double levels[] = {level};
  const auto bands = bootstrap_residual_bands(residuals, resamples, levels, seed);
  const double point =
      forecast::mean_reversion_forecast(history.scores.back(), model, static_cast<double>(horizon));
  return band_interval(point, bands.front(), level);
}

}  // namespace pulsecal::conformal
