#include "pulsecal/harness/experiments.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "pulsecal/error.hpp"
#include "pulsecal/forecast.hpp"
#include "pulsecal/rng.hpp"
#include "pulsecal/stats.hpp"

namespace pulsecal::harness {

void CoverageAccumulator::add(const std::string& group, const std::string& method,
                              std::size_t alpha_index, double alpha, const Interval& interval,
                              double actual) {
  Bucket* bucket = nullptr;
  for (auto it = buckets_.rbegin(); it != buckets_.rend(); ++it) {
    if (it->alpha_index == alpha_index && it->line.method == method && it->line.group == group) {
      bucket = &*it;
      break;
    }
  }
  if (bucket == nullptr) {
    buckets_.push_back({{group, method, alpha, 0, 0.0, 0.0}, alpha_index, 0, 0.0});
    bucket = &buckets_.back();
  }
  ++bucket->line.n;
  bucket->hits += interval.contains(actual) ? 1 : 0;
  bucket->width_sum += interval.width();
}

std::vector<CoverageLine> CoverageAccumulator::lines() const {
  std::vector<CoverageLine> out;
  out.reserve(buckets_.size());
  for (const auto& b : buckets_) {
    CoverageLine line = b.line;
    const auto n = static_cast<double>(line.n);
    line.coverage = static_cast<double>(b.hits) / n;
    line.mean_width = b.width_sum / n;
    out.push_back(std::move(line));
  }
  return out;
}

namespace {

struct AlphaSpec {
  double alpha = 0.0;
  bool main = false;
  bool curve = false;
};

void add_alpha(std::vector<AlphaSpec>& specs, double alpha, bool main, bool curve) {
  for (auto& s : specs) {
    if (std::abs(s.alpha - alpha) < 1e-12) {
      s.main = s.main || main;
      s.curve = s.curve || curve;
      return;
    }
  }
  specs.push_back({alpha, main, curve});
}

struct AgentFit {
  const ScoreSeries* series = nullptr;
  std::size_t history = 0;
  std::size_t train = 0;
  forecast::ForecastModel model;
  conformal::Stratum stratum = conformal::Stratum::Stable;
};

double mean_of(const std::vector<double>& xs) {
  return xs.empty() ? std::numeric_limits<double>::quiet_NaN() : stats::mean(xs);
}

}  // namespace

CalibrationStudy run_calibration_study(const Dataset& data, const RunConfig& config) {
  config.validate();
  require(!data.series.empty(), "calibration needs at least one series");
  const std::uint64_t seed = config.require_seed();

  std::vector<std::size_t> horizons = config.horizons;
  horizons.push_back(config.curve_horizon);
  std::sort(horizons.begin(), horizons.end());
  horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());

  std::vector<AgentFit> fits;
  for (const auto& s : data.series) {
    AgentFit fit;
    fit.series = &s;
    const auto n = s.size();
    const auto test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * config.test_fraction));
    require(test >= 1, fmt::format("{}: series too short for a test window", s.agent_id));
    fit.history = n - test;
    require(fit.history > horizons.back() + 2,
            fmt::format("{}: history shorter than the longest horizon", s.agent_id));
    fit.train = conformal::split_counts(fit.history, config.train_fraction).train;
    fit.model = forecast::estimate_model(s.values().subspan(0, fit.train), config.reversion_rate);
    fit.stratum = conformal::classify(data.sigma_cross(s.agent_id), config.mondrian_threshold);
    fits.push_back(fit);
  }

  CoverageAccumulator by_horizon;
  CoverageAccumulator curve;
  CoverageAccumulator by_agent;
  CoverageAccumulator by_stratum;
  CoverageAccumulator by_stratum_horizon;
  CalibrationStudy study;

  for (const std::size_t h : horizons) {
    std::vector<AlphaSpec> specs;
    add_alpha(specs, config.alpha, true, false);
    if (h == config.curve_horizon) {
      for (double level : config.levels) {
        add_alpha(specs, 1.0 - level, false, true);
      }
    }
    std::vector<double> band_levels;
    for (const auto& spec : specs) {
      band_levels.push_back(1.0 - spec.alpha);
    }

    std::vector<conformal::CalibrationSet> cals;
    std::vector<conformal::AgentResiduals> residuals;
    for (const auto& fit : fits) {
      auto r = conformal::horizon_residuals(fit.series->values(), fit.train, fit.history, h,
                                            fit.model);
      for (double& x : r) {
        x = std::abs(x);
      }
      cals.emplace_back(r);
      residuals.push_back({fit.series->agent_id, std::move(r),
                           data.sigma_cross(fit.series->agent_id)});
    }
    const auto strata = conformal::mondrian_calibrate(residuals, config.mondrian_threshold);
    study.fallbacks.push_back(fmt::format("{},{},{}", h,
                                          strata.fell_back(conformal::Stratum::Stable),
                                          strata.fell_back(conformal::Stratum::Volatile)));
    const std::string hs = fmt::format("{}", h);

    for (std::size_t i = 0; i < fits.size(); ++i) {
      const auto& fit = fits[i];
      const auto& s = *fit.series;
      const auto scores = s.values();
      const auto stratum = std::string(conformal::to_string(fit.stratum));
      const auto signed_residuals =
          conformal::horizon_residuals(scores, h, fit.history, h, fit.model);
      const auto bands = conformal::bootstrap_residual_bands(
          signed_residuals, config.resamples, band_levels, derive_seed(seed, i, h));
      const auto& mondrian_cal = strata.calibration_for(s.agent_id);

      for (std::size_t k = 0; k < specs.size(); ++k) {
        const auto& spec = specs[k];
        const double alpha = spec.alpha;
        const double level = 1.0 - alpha;
        conformal::AciRunner runner(residuals[i].residuals, alpha, {config.gamma, h, true});

        auto record = [&](const std::string& method, const Interval& interval, double actual) {
          if (spec.main) {
            by_horizon.add(hs, method, 0, alpha, interval, actual);
            by_stratum_horizon.add(fmt::format("{}@{}", stratum, h), method, 0, alpha, interval,
                                   actual);
            if (h == config.curve_horizon) {
              by_agent.add(s.agent_id, method, 0, alpha, interval, actual);
              by_stratum.add(stratum, method, 0, alpha, interval, actual);
            }
          }
          if (spec.curve) {
            curve.add(hs, method, k, alpha, interval, actual);
          }
        };

        for (std::size_t t = fit.history - h; t + h < s.size(); ++t) {
          runner.reveal(t, scores[t]);
          const double actual = scores[t + h];
          const double f = forecast::mean_reversion_forecast(scores[t], fit.model,
                                                             static_cast<double>(h));
          record("parametric",
                 forecast::parametric_interval(f, fit.model, static_cast<double>(h), level),
                 actual);
          record("split-conformal", conformal::conformal_interval(f, cals[i], alpha), actual);
          record(kPooledLabel, conformal::conformal_interval(f, strata.pooled(), alpha), actual);
          record("mondrian",
                 conformal::conformal_interval(f, mondrian_cal, alpha, kUnitRange,
                                               Method::Mondrian),
                 actual);
          record("aci", runner.issue(t, f), actual);
          record("bootstrap", conformal::band_interval(f, bands[k], level), actual);
        }
      }
    }
  }

  study.by_horizon = by_horizon.lines();
  study.curve = curve.lines();
  study.by_agent = by_agent.lines();
  study.by_stratum = by_stratum.lines();
  study.by_stratum_horizon = by_stratum_horizon.lines();
  return study;
}

// ---------------------------------------------------------------------------

ShiftStudy run_shift_study(const ScoreSeries& series, std::size_t event_index,
                           const ShiftStudyOptions& options) {
  const std::size_t h = options.horizon;
  const std::size_t n = series.size();
  require(h >= 1, "horizon must be at least 1");
  require(options.alpha > 0.0 && options.alpha < 1.0, "alpha must lie in (0, 1)");
  require(options.gamma > 0.0, "gamma must be positive");
  require(event_index >= options.pre_window + 3 + h,
          fmt::format("{}: event too early for the pre-event window", series.agent_id));
  require(event_index + 6 + h <= n,
          fmt::format("{}: series ends too soon after the event", series.agent_id));

  const auto scores = series.values();
  const std::size_t history = event_index - options.pre_window;
  const auto counts = conformal::split_counts(history, options.train_fraction);
  const auto model =
      forecast::estimate_model(scores.subspan(0, counts.train), options.reversion_rate);
  auto chronological = conformal::horizon_residuals(scores, counts.train, history, h, model);
  require(!chronological.empty(), fmt::format("{}: empty calibration set", series.agent_id));
  for (double& r : chronological) {
    r = std::abs(r);
  }
  const conformal::CalibrationSet cal(chronological);
  const auto q = conformal::conformal_quantile(cal, options.alpha);

  conformal::AciRunner runner(chronological, options.alpha, {options.gamma, h, true});
  ShiftStudy study;
  auto& summary = study.summary;
  summary.agent_id = series.agent_id;
  summary.event_index = event_index;
  summary.split_half_width = q.unbounded ? std::numeric_limits<double>::infinity() : q.value;

  auto track = [&] {
    const auto& st = runner.state();
    summary.telescoping_error =
        std::max(summary.telescoping_error, std::abs(st.working_alpha - st.telescoped_alpha()));
  };

  for (std::size_t t = history; t + h < n; ++t) {
    runner.reveal(t, scores[t]);
    track();
    ShiftStep step;
    step.offset = static_cast<long>(t) - static_cast<long>(event_index);
    step.hour = series.hours[t];
    step.actual = scores[t + h];
    step.working_alpha = runner.state().working_alpha;
    const double f = forecast::mean_reversion_forecast(scores[t], model, static_cast<double>(h));
    step.aci = runner.issue(t, f);
    step.split = conformal::conformal_interval(f, cal, options.alpha);
    step.parametric =
        forecast::parametric_interval(f, model, static_cast<double>(h), 1.0 - options.alpha);
    study.steps.push_back(step);
  }
  for (std::size_t t = n - h; t < n; ++t) {
    runner.reveal(t, scores[t]);
    track();
  }

  std::vector<double> pre, post6, split_pre, split_post6, final_alpha;
  std::size_t aci_miss = 0, split_miss = 0, parametric_miss = 0;
  for (const auto& step : study.steps) {
    if (step.offset < 0) {
      pre.push_back(step.aci.width());
      split_pre.push_back(step.split.width());
      continue;
    }
    if (step.offset < 6) {
      post6.push_back(step.aci.width());
      split_post6.push_back(step.split.width());
    }
    ++summary.post_steps;
    aci_miss += step.aci.contains(step.actual) ? 0 : 1;
    split_miss += step.split.contains(step.actual) ? 0 : 1;
    parametric_miss += step.parametric.contains(step.actual) ? 0 : 1;
  }
  const std::size_t tail = std::min(options.final_window, summary.post_steps);
  for (std::size_t i = study.steps.size() - tail; i < study.steps.size(); ++i) {
    final_alpha.push_back(study.steps[i].working_alpha);
  }
  const auto post = static_cast<double>(summary.post_steps);
  summary.pre_mean_width = mean_of(pre);
  summary.post6_mean_width = mean_of(post6);
  summary.width_ratio = summary.post6_mean_width / summary.pre_mean_width;
  summary.split_pre_mean_width = mean_of(split_pre);
  summary.split_post6_mean_width = mean_of(split_post6);
  summary.post_miscoverage = static_cast<double>(aci_miss) / post;
  summary.split_post_miscoverage = static_cast<double>(split_miss) / post;
  summary.parametric_post_miscoverage = static_cast<double>(parametric_miss) / post;
  summary.final_alpha_mean = mean_of(final_alpha);
  return study;
}

PanelSummary summarize_panel(std::span<const ShiftSummary> runs, double alpha) {
  require(!runs.empty(), "panel needs at least one run");
  PanelSummary panel;
  panel.streams = runs.size();
  panel.min_post_steps = std::numeric_limits<std::size_t>::max();
  std::vector<double> pre, post6, final_alpha;
  for (const auto& r : runs) {
    pre.push_back(r.pre_mean_width);
    post6.push_back(r.post6_mean_width);
    final_alpha.push_back(r.final_alpha_mean);
    panel.max_miscoverage_gap =
        std::max(panel.max_miscoverage_gap, std::abs(r.post_miscoverage - alpha));
    panel.max_telescoping_error = std::max(panel.max_telescoping_error, r.telescoping_error);
    panel.min_post_steps = std::min(panel.min_post_steps, r.post_steps);
  }
  panel.pre_mean_width = stats::mean(pre);
  panel.post6_mean_width = stats::mean(post6);
  panel.width_ratio = panel.post6_mean_width / panel.pre_mean_width;
  panel.final_alpha_mean = stats::mean(final_alpha);
  return panel;
}

// ---------------------------------------------------------------------------

RankStudy run_rank_study(std::span<const ScoreSeries> series, const RankStudyOptions& options,
                         std::span<const double> true_values) {
  require(series.size() >= 2, "ranking needs at least two agents");
  require(true_values.empty() || true_values.size() == series.size(),
          "one true value per agent is required");
  RankStudy study;
  std::vector<std::string> ids;
  for (const auto& s : series) {
    require(s.size() >= 3, fmt::format("{}: series too short", s.agent_id));
    const auto scores = s.values();
    const auto counts = conformal::split_counts(s.size(), options.train_fraction);
    const auto model =
        forecast::estimate_model(scores.subspan(0, counts.train), options.reversion_rate);
    const auto cal =
        conformal::horizon_calibration(scores, counts.train, s.size(), options.horizon, model);
    const double f = forecast::mean_reversion_forecast(scores.back(), model,
                                                       static_cast<double>(options.horizon));
    study.entries.push_back(
        {s.agent_id, scores.back(), conformal::conformal_interval(f, cal, options.alpha)});
    ids.push_back(s.agent_id);
  }

  const ranking::DeltaCalibrationOptions delta_options{options.horizon, options.train_fraction,
                                                       options.reversion_rate};
  for (std::size_t i = 0; i < series.size(); ++i) {
    for (std::size_t j = i + 1; j < series.size(); ++j) {
      const auto pair = ranking::PairKey::canonical(series[i].agent_id, series[j].agent_id);
      const bool swapped = pair.first != series[i].agent_id;
      const auto& first = swapped ? series[j] : series[i];
      const auto& second = swapped ? series[i] : series[j];
      const auto cal = ranking::delta_calibration(first, second, delta_options);
      const double delta = first.scores.back() - second.scores.back();
      study.decisions.push_back(ranking::abstain_decision(pair, delta, cal, options.alpha));
    }
  }

  study.per_pair = ranking::build_leaderboard(study.entries, study.decisions,
                                              ranking::LeaderboardMode::PerPairAlpha, options.fdr_q);
  study.fdr = ranking::build_leaderboard(study.entries, study.decisions,
                                         ranking::LeaderboardMode::Fdr, options.fdr_q);
  if (!true_values.empty()) {
    study.per_pair_false_rate =
        ranking::false_ranking_rate(study.per_pair.decisions, ids, true_values);
    study.fdr_false_rate = ranking::false_ranking_rate(study.fdr.decisions, ids, true_values);
  }
  return study;
}

// ---------------------------------------------------------------------------

SensitivityStudy run_sensitivity_study(const Dataset& data, const RunConfig& config) {
  config.validate();
  const std::uint64_t seed = config.require_seed();
  if (data.factors.empty()) {
    throw IoError("sensitivity needs factors.csv in the data directory");
  }
  std::vector<scorekit::FactorVector> agents;
  for (const auto& record : data.factors) {
    agents.push_back(record.factors);
  }
  require(agents.size() >= 2, "sensitivity needs at least two agents");
  const auto weights = scorekit::Weights::standard();

  SensitivityStudy study;
  for (std::size_t i = 0; i < config.concentrations.size(); ++i) {
    const double k = config.concentrations[i];
    study.dirichlet.push_back({k, scorekit::dirichlet_weight_sensitivity(
                                      agents, weights, k, config.draws, derive_seed(seed, i, 0xD1))});
  }

  const auto composites = scorekit::composite_scores(agents, weights);
  const auto positions = scorekit::rank_positions(composites);
  const auto unstable = scorekit::single_factor_perturbation(
      agents, weights, config.perturbation_delta, config.rank_window);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    study.u_model.push_back(
        {data.factors[i].agent_id, composites[i], positions[i] + 1, unstable[i]});
  }

  for (std::size_t i = 0; i < data.series.size(); ++i) {
    const auto scores = data.series[i].values();
    const std::size_t m = std::min(config.bootstrap_window, scores.size());
    if (m < 2) {
      continue;
    }
    study.bootstrap.push_back(
        {data.series[i].agent_id, m,
         scorekit::bootstrap_score_ci(scores.subspan(scores.size() - m), config.resamples,
                                      config.ci_level, derive_seed(seed, i, 0xB0))});
  }
  return study;
}

PipelineStudy run_pipeline_study(const RunConfig& config) {
  config.validate();
  const std::uint64_t seed = config.require_seed();
  PipelineStudy study;
  for (std::size_t i = 0; i < config.stage_sigmas.size(); ++i) {
    study.stages.push_back({fmt::format("stage-{}", i + 1), config.stage_sigmas[i]});
  }
  study.independence = pipeline::independence_bound(study.stages);
  study.worst_case = pipeline::worst_case_bound(study.stages);
  const double s1 = config.stage_sigmas[0];
  const double s2 = config.stage_sigmas[1];
  study.additive = pipeline::bound_tightness_sweep(s1, s2, config.rho_grid,
                                                   pipeline::Composition::Additive,
                                                   config.samples, derive_seed(seed, 0, 0xA1));
  study.multiplicative = pipeline::bound_tightness_sweep(
      s1, s2, config.rho_grid, pipeline::Composition::Multiplicative, config.samples,
      derive_seed(seed, 1, 0xA1));
  return study;
}

}  // namespace pulsecal::harness
