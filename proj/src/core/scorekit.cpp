#include "pulsecal/scorekit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pulsecal/error.hpp"
#include "pulsecal/rng.hpp"
#include "pulsecal/stats.hpp"

namespace pulsecal::scorekit {

void FactorVector::validate() const {
  for (std::size_t f = 0; f < kFactorCount; ++f) {
    if (!missing[f]) {
      require(std::isfinite(values[f]) && values[f] >= 0.0 && values[f] <= 1.0,
              "factor value outside [0, 1]");
    }
  }
}

void Weights::validate() const {
  double sum = 0.0;
  for (double w : values) {
    require(std::isfinite(w) && w >= 0.0, "weights must be nonnegative");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-9, "weights must sum to 1");
}

double composite_score(const FactorVector& factors, const Weights& weights) {
  weights.validate();
  factors.validate();
  double score = 0.0;
  for (std::size_t f = 0; f < kFactorCount; ++f) {
    score += weights.values[f] * factors.effective(f);
  }
  return std::clamp(score, 0.0, 1.0);
}

double cross_source_divergence(const PlatformScoreSet& platforms) {
  require(platforms.scores.size() >= 2, "divergence needs at least two platforms");
  std::vector<double> values;
  values.reserve(platforms.scores.size());
  for (const auto& [platform, score] : platforms.scores) {
    values.push_back(score);
  }
  return stats::population_std(values);
}

std::vector<std::size_t> rank_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::vector<std::size_t> rank_positions(std::span<const double> scores) {
  const auto order = rank_order(scores);
  std::vector<std::size_t> position(scores.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    position[order[r]] = r;
  }
  return position;
}

double kendall_tau(std::span<const std::size_t> ranking_a, std::span<const std::size_t> ranking_b) {
  const std::size_t n = ranking_a.size();
  require(n == ranking_b.size(), "rankings cover different item sets");
  require(n >= 2, "kendall tau needs at least two items");
  // Positions keyed by item id; both rankings must be permutations of the same ids.
  const std::size_t max_id = *std::max_element(ranking_a.begin(), ranking_a.end());
  std::vector<std::ptrdiff_t> pos_a(max_id + 1, -1);
  std::vector<std::ptrdiff_t> pos_b(max_id + 1, -1);
  for (std::size_t r = 0; r < n; ++r) {
    require(pos_a[ranking_a[r]] < 0, "ranking repeats an item");
    pos_a[ranking_a[r]] = static_cast<std::ptrdiff_t>(r);
  }
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t item = ranking_b[r];
    require(item <= max_id && pos_a[item] >= 0, "rankings cover different item sets");
    require(pos_b[item] < 0, "ranking repeats an item");
    pos_b[item] = static_cast<std::ptrdiff_t>(r);
  }
  long long concordant = 0;
  long long discordant = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t x = ranking_a[i];
      const std::size_t y = ranking_a[j];
      // x precedes y in ranking_a by construction.
      if (pos_b[x] < pos_b[y]) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return static_cast<double>(concordant - discordant) / pairs;
}

std::vector<double> composite_scores(std::span<const FactorVector> agents, const Weights& weights) {
  std::vector<double> scores;
  scores.reserve(agents.size());
  for (const auto& agent : agents) {
    scores.push_back(composite_score(agent, weights));
  }
  return scores;
}

namespace {

Weights renormalized(std::array<double, kFactorCount> raw) {
  double sum = 0.0;
  for (double& w : raw) {
    w = std::max(w, 0.0);
    sum += w;
  }
  require(sum > 0.0, "perturbed weights vanished");
  Weights out;
  for (std::size_t f = 0; f < kFactorCount; ++f) {
    out.values[f] = raw[f] / sum;
  }
  return out;
}

}  // namespace

std::vector<int> single_factor_perturbation(std::span<const FactorVector> agents,
                                            const Weights& weights, double delta,
                                            int rank_window) {
  weights.validate();
  require(delta > 0.0 && delta < 1.0, "perturbation size must lie in (0, 1)");
  require(rank_window >= 0, "rank window must be nonnegative");
  std::vector<int> counts(agents.size(), 0);
  if (agents.size() < 2) {
    return counts;
  }
  const auto base = rank_positions(composite_scores(agents, weights));
  for (std::size_t f = 0; f < kFactorCount; ++f) {
    for (const double sign : {+1.0, -1.0}) {
      auto raw = weights.values;
      raw[f] += sign * delta;
      const auto perturbed = rank_positions(composite_scores(agents, renormalized(raw)));
      for (std::size_t a = 0; a < agents.size(); ++a) {
        const auto shift = static_cast<long long>(perturbed[a]) - static_cast<long long>(base[a]);
        if (std::llabs(shift) > rank_window) {
          ++counts[a];
        }
      }
    }
  }
  return counts;
}

TauSummary dirichlet_weight_sensitivity(std::span<const FactorVector> agents,
                                        const Weights& base_weights, double concentration,
                                        std::size_t draws, std::uint64_t seed) {
  base_weights.validate();
  require(agents.size() >= 2, "weight sensitivity needs at least two agents");
  require(concentration > 0.0 && std::isfinite(concentration), "concentration must be positive");
  require(draws >= 1, "at least one Dirichlet draw is required");

  const auto base_ranking = rank_order(composite_scores(agents, base_weights));
  Rng rng(seed);
  std::vector<double> taus;
  taus.reserve(draws);
  for (std::size_t d = 0; d < draws; ++d) {
    std::array<double, kFactorCount> raw{};
    double sum = 0.0;
    for (std::size_t f = 0; f < kFactorCount; ++f) {
      // A zero base weight stays at zero (degenerate Dirichlet component).
      raw[f] = base_weights.values[f] > 0.0 ? rng.gamma(concentration * base_weights.values[f]) : 0.0;
      sum += raw[f];
    }
    Weights drawn;
    for (std::size_t f = 0; f < kFactorCount; ++f) {
      drawn.values[f] = raw[f] / sum;
    }
    std::vector<double> scores;
    scores.reserve(agents.size());
    for (const auto& agent : agents) {
      double s = 0.0;
      for (std::size_t f = 0; f < kFactorCount; ++f) {
        s += drawn.values[f] * agent.effective(f);
      }
      scores.push_back(s);
    }
    taus.push_back(kendall_tau(base_ranking, rank_order(scores)));
  }
  std::sort(taus.begin(), taus.end());
  return TauSummary{stats::quantile_sorted(taus, 0.5), stats::quantile_sorted(taus, 0.05),
                    stats::quantile_sorted(taus, 0.95), draws};
}

Interval bootstrap_score_ci(std::span<const double> observations, std::size_t resamples,
                            double level, std::uint64_t seed) {
  require(!observations.empty(), "bootstrap needs at least one observation");
  require(resamples >= 100, "bootstrap needs at least 100 resamples");
  require(level > 0.0 && level < 1.0, "level must lie in (0, 1)");
  const std::size_t n = observations.size();
  Rng rng(seed);
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += observations[rng.index(n)];
    }
    m = sum / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  Interval out;
  out.center = stats::mean(observations);
  out.lower = std::min(stats::quantile_sorted(means, (1.0 - level) / 2.0), out.center);
  out.upper = std::max(stats::quantile_sorted(means, (1.0 + level) / 2.0), out.center);
  out.level = level;
  out.method = Method::Bootstrap;
  out.degenerate = out.lower == out.upper;
  return out;
}

}  // namespace pulsecal::scorekit
