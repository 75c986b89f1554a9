#include "pulsecal/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pulsecal/error.hpp"
#include "pulsecal/rng.hpp"

namespace pulsecal::simgen {

namespace {

bool in_unit(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

double innovation(Rng& rng, double tail_df) {
  return tail_df > 0.0 ? rng.student_t_unit(tail_df) : rng.normal();
}

// Tags separating the RNG streams an agent index owns.
constexpr std::uint64_t kStreamTag = 1;
constexpr std::uint64_t kProfileTag = 2;
constexpr std::uint64_t kPlatformTag = 3;

}  // namespace

void StreamSpec::validate() const {
  require(in_unit(long_run_mean), "long-run mean must lie in [0, 1]");
  require(in_unit(initial_score), "initial score must lie in [0, 1]");
  require(in_unit(reversion_rate), "reversion rate must lie in [0, 1]");
  require(std::isfinite(innovation_std) && innovation_std >= 0.0, "innovation std must be >= 0");
  require(length >= 1, "stream length must be at least 1");
  require(tail_df == 0.0 || tail_df > 2.0, "tail df must be 0 (Gaussian) or exceed 2");
}

void ShiftEvent::validate(std::size_t length) const {
  require(time < length, "shift event time outside the stream");
  require(std::isfinite(jump), "shift jump must be finite");
  require(std::isfinite(innovation_multiplier) && innovation_multiplier > 0.0,
          "innovation multiplier must be positive");
}

namespace {

ScoreSeries generate(const StreamSpec& spec, const ShiftEvent* event) {
  spec.validate();
  if (event != nullptr) {
    event->validate(spec.length);
  }
  Rng rng(spec.seed);
  std::vector<double> scores(spec.length);
  const bool shifted_at_start = event != nullptr && event->time == 0;
  scores[0] = shifted_at_start ? clamp_unit(spec.initial_score + event->jump) : spec.initial_score;
  for (std::size_t t = 1; t < spec.length; ++t) {
    const bool after = event != nullptr && t >= event->time;
    const bool settled = event != nullptr && t > event->time;
    const double mean = settled ? spec.long_run_mean + event->jump : spec.long_run_mean;
    const double scale = after ? spec.innovation_std * event->innovation_multiplier
                               : spec.innovation_std;
    const double prev = scores[t - 1];
    double next = prev + spec.reversion_rate * (mean - prev) + scale * innovation(rng, spec.tail_df);
    if (event != nullptr && t == event->time) {
      next += event->jump;
    }
    scores[t] = clamp_unit(next);
  }
  return ScoreSeries::from_scores(spec.agent_id, std::move(scores));
}

}  // namespace

ScoreSeries gen_stream(const StreamSpec& spec) { return generate(spec, nullptr); }

ScoreSeries gen_stream(const StreamSpec& spec, const ShiftEvent& event) {
  return generate(spec, &event);
}

ScoreSeries inject_shift(const ScoreSeries& series, const ShiftEvent& event) {
  event.validate(series.size());
  ScoreSeries out = series;
  const double anchor = series.scores[event.time];
  for (std::size_t t = event.time; t < series.size(); ++t) {
    const double s = series.scores[t];
    out.scores[t] = clamp_unit(s + event.jump + (event.innovation_multiplier - 1.0) * (s - anchor));
  }
  return out;
}

std::string_view to_string(AgentClass cls) {
  return cls == AgentClass::Stable ? "stable" : "volatile";
}

void PopulationSpec::validate() const {
  require(agent_count() >= 1, "population must contain at least one agent");
  require(length >= 1, "stream length must be at least 1");
  require(platforms >= 2, "at least two platforms are needed for divergence");
  require(in_unit(mean_low) && in_unit(mean_high) && mean_low <= mean_high,
          "mean range must be an ordered subrange of [0, 1]");
  require(stable_innovation_std >= 0.0 && volatile_innovation_std >= 0.0,
          "innovation std must be >= 0");
  require(stable_divergence >= 0.0 && volatile_divergence >= 0.0,
          "divergence scale must be >= 0");
  require(threshold > 0.0, "stratum threshold must be positive");
  require(in_unit(reversion_rate), "reversion rate must lie in [0, 1]");
  require(released_agents <= agent_count(), "more released agents than agents");
  if (released_agents > 0) {
    release.validate(length);
  }
}

std::string agent_name(std::size_t index) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "agent-%03zu", index);
  return buffer;
}

Population gen_population(const PopulationSpec& spec) {
  spec.validate();
  Population pop;
  const std::size_t n = spec.agent_count();
  pop.series.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const AgentClass cls = i < spec.stable_count ? AgentClass::Stable : AgentClass::Volatile;
    const bool stable = cls == AgentClass::Stable;
    Rng profile(derive_seed(spec.seed, i, kProfileTag));
    const double mean = spec.mean_low + (spec.mean_high - spec.mean_low) * profile.uniform();

    StreamSpec stream;
    stream.agent_id = agent_name(i);
    stream.long_run_mean = mean;
    stream.initial_score = mean;
    stream.reversion_rate = spec.reversion_rate;
    stream.innovation_std = stable ? spec.stable_innovation_std : spec.volatile_innovation_std;
    stream.length = spec.length;
    stream.tail_df = spec.tail_df;
    stream.seed = derive_seed(spec.seed, i, kStreamTag);
    if (i < spec.released_agents) {
      pop.series.push_back(gen_stream(stream, spec.release));
      pop.events.emplace_back(spec.release);
    } else {
      pop.series.push_back(gen_stream(stream));
      pop.events.emplace_back(std::nullopt);
    }

    Rng platform_rng(derive_seed(spec.seed, i, kPlatformTag));
    const double scale = stable ? spec.stable_divergence : spec.volatile_divergence;
    bool accepted = false;
    scorekit::PlatformScoreSet platforms;
    double sigma = 0.0;
    for (std::size_t attempt = 0; attempt <= spec.max_retries && !accepted; ++attempt) {
      platforms = scorekit::PlatformScoreSet{stream.agent_id, {}};
      for (std::size_t p = 0; p < spec.platforms; ++p) {
        char name[32];
        std::snprintf(name, sizeof name, "platform-%02zu", p);
        platforms.scores[name] = clamp_unit(mean + scale * platform_rng.normal());
      }
      sigma = scorekit::cross_source_divergence(platforms);
      accepted = stable ? sigma < spec.threshold : sigma >= spec.threshold;
    }
    require(accepted, "agent " + stream.agent_id +
                          ": platform divergence kept landing on the wrong side of the threshold");
    pop.platforms.push_back(std::move(platforms));
    pop.classes.push_back(cls);
    pop.true_means.push_back(mean);
    pop.sigma_cross.push_back(sigma);
  }
  return pop;
}

ErrorPairs gen_correlated_errors(double sigma_a, double sigma_b, double rho, std::size_t n,
                                 std::uint64_t seed) {
  require(std::isfinite(rho) && rho >= -1.0 && rho <= 1.0, "correlation must lie in [-1, 1]");
  require(sigma_a >= 0.0 && sigma_b >= 0.0, "error scales must be nonnegative");
  Rng rng(seed);
  const double residual_weight = std::sqrt(1.0 - rho * rho);
  ErrorPairs out;
  out.first.resize(n);
  out.second.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    out.first[i] = sigma_a * z1;
    out.second[i] = sigma_b * (rho * z1 + residual_weight * z2);
  }
  return out;
}

std::vector<scorekit::FactorVector> gen_factor_matrix(std::size_t agents, std::uint64_t seed,
                                                      double missing_rate) {
  require(missing_rate >= 0.0 && missing_rate < 1.0, "missing rate must lie in [0, 1)");
  Rng rng(seed);
  std::vector<scorekit::FactorVector> matrix(agents);
  for (auto& row : matrix) {
    for (std::size_t f = 0; f < scorekit::kFactorCount; ++f) {
      row.values[f] = 0.05 + 0.9 * rng.uniform();
      row.missing[f] = missing_rate > 0.0 && rng.uniform() < missing_rate;
    }
  }
  return matrix;
}

}  // namespace pulsecal::simgen
