#include "pulsecal/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "pulsecal/error.hpp"
#include "pulsecal/stats.hpp"

namespace pulsecal::ranking {

PairKey PairKey::canonical(const std::string& a, const std::string& b) {
  require(a != b, "a pair needs two distinct agents");
  return a < b ? PairKey{a, b} : PairKey{b, a};
}

std::string_view to_string(Decision decision) {
  switch (decision) {
    case Decision::FirstAbove:
      return "first-above";
    case Decision::SecondAbove:
      return "second-above";
    case Decision::Abstain:
      return "abstain";
  }
  return "unknown";
}

std::string_view to_string(LeaderboardMode mode) {
  return mode == LeaderboardMode::PerPairAlpha ? "per-pair" : "fdr";
}

std::vector<double> aligned_difference(const ScoreSeries& first, const ScoreSeries& second) {
  std::vector<double> diff;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < first.size() && j < second.size()) {
    if (first.hours[i] < second.hours[j]) {
      ++i;
    } else if (second.hours[j] < first.hours[i]) {
      ++j;
    } else {
      diff.push_back(first.scores[i] - second.scores[j]);
      ++i;
      ++j;
    }
  }
  return diff;
}

conformal::CalibrationSet delta_calibration(const ScoreSeries& first, const ScoreSeries& second,
                                            const DeltaCalibrationOptions& options) {
  const auto diff = aligned_difference(first, second);
  require(diff.size() >= 2, "pair " + first.agent_id + "/" + second.agent_id +
                                " shares fewer than two timestamps");
  const auto counts = conformal::split_counts(diff.size(), options.train_fraction);
  forecast::ForecastModel model;
  model.reversion_rate = options.reversion_rate;
  model.long_run_mean =
      stats::mean(std::span<const double>(diff.data(), counts.train));
  auto cal = conformal::horizon_calibration(diff, counts.train, diff.size(), options.horizon,
                                            model, kDifferenceRange);
  require(!cal.empty(), "pair history too short for the calibration horizon");
  return conformal::CalibrationSet(
      std::vector<double>(cal.residuals().begin(), cal.residuals().end()), options.train_fraction);
}

double conformal_p_value(double delta, const conformal::CalibrationSet& cal) {
  require(!cal.empty(), "p-value needs a nonempty calibration set");
  const auto residuals = cal.residuals();
  const double stat = std::abs(delta);
  const auto at_least =
      static_cast<std::size_t>(residuals.end() - std::lower_bound(residuals.begin(), residuals.end(), stat));
  return static_cast<double>(1 + at_least) / static_cast<double>(residuals.size() + 1);
}

RankDecision abstain_decision(const PairKey& pair, double delta,
                              const conformal::CalibrationSet& cal, double alpha) {
  RankDecision out;
  out.pair = pair;
  out.delta = delta;
  out.interval = conformal::conformal_interval(delta, cal, alpha, kDifferenceRange);
  out.p_value = conformal_p_value(delta, cal);
  if (out.interval.contains(0.0)) {
    out.decision = Decision::Abstain;
  } else {
    out.decision = delta > 0.0 ? Decision::FirstAbove : Decision::SecondAbove;
  }
  return out;
}

std::vector<bool> benjamini_hochberg(std::span<const double> p_values, double q) {
  require(q > 0.0 && q < 1.0, "target FDR must lie in (0, 1)");
  const std::size_t m = p_values.size();
  std::vector<bool> reject(m, false);
  if (m == 0) {
    return reject;
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::size_t k = 0;
  for (std::size_t r = m; r >= 1; --r) {
    if (p_values[order[r - 1]] <= static_cast<double>(r) * q / static_cast<double>(m)) {
      k = r;
      break;
    }
  }
  if (k == 0) {
    return reject;
  }
  const double cutoff = p_values[order[k - 1]];
  for (std::size_t i = 0; i < m; ++i) {
    reject[i] = p_values[i] <= cutoff;
  }
  return reject;
}

namespace {

struct PairLess {
  bool operator()(const PairKey& a, const PairKey& b) const {
    return std::tie(a.first, a.second) < std::tie(b.first, b.second);
  }
};

}  // namespace

Leaderboard build_leaderboard(std::span<const AgentEntry> agents,
                              std::span<const RankDecision> decisions, LeaderboardMode mode,
                              double q) {
  require(!agents.empty(), "leaderboard needs at least one agent");
  std::vector<std::size_t> order(agents.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (agents[a].score != agents[b].score) {
      return agents[a].score > agents[b].score;
    }
    return agents[a].agent_id < agents[b].agent_id;
  });

  Leaderboard board;
  board.mode = mode;
  std::map<std::string, std::size_t> rank_of;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& agent = agents[order[r]];
    require(rank_of.emplace(agent.agent_id, r + 1).second,
            "agent '" + agent.agent_id + "' listed twice");
    board.rows.push_back(LeaderboardRow{agent.agent_id, agent.score, r + 1, agent.interval});
  }

  std::map<PairKey, const RankDecision*, PairLess> by_pair;
  for (const auto& d : decisions) {
    by_pair[d.pair] = &d;
  }
  for (std::size_t i = 0; i < board.rows.size(); ++i) {
    for (std::size_t j = i + 1; j < board.rows.size(); ++j) {
      const auto key = PairKey::canonical(board.rows[i].agent_id, board.rows[j].agent_id);
      const auto it = by_pair.find(key);
      require(it != by_pair.end(),
              "missing pair decision for " + key.first + "/" + key.second);
      board.decisions.push_back(*it->second);
    }
  }

  if (mode == LeaderboardMode::Fdr) {
    std::vector<double> p(board.decisions.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = board.decisions[i].p_value;
    }
    const auto rejected = benjamini_hochberg(p, q);
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto& d = board.decisions[i];
      d.fdr_adjusted = true;
      if (rejected[i] && d.delta != 0.0) {
        d.decision = d.delta > 0.0 ? Decision::FirstAbove : Decision::SecondAbove;
      } else {
        d.decision = Decision::Abstain;
      }
    }
  }

  auto& s = board.summary;
  const std::size_t bands = (board.rows.size() + 9) / 10;
  std::vector<std::size_t> band_abstained(bands, 0);
  s.band_pairs.assign(bands, 0);
  std::size_t top10_abstained = 0;
  for (const auto& d : board.decisions) {
    const bool abstained = d.decision == Decision::Abstain;
    ++s.pairs;
    (abstained ? s.abstained : s.ranked) += 1;
    const std::size_t ra = rank_of.at(d.pair.first) - 1;
    const std::size_t rb = rank_of.at(d.pair.second) - 1;
    if (ra < 10 && rb < 10) {
      ++s.top10_pairs;
      top10_abstained += abstained ? 1 : 0;
    }
    if (ra / 10 == rb / 10) {
      ++s.band_pairs[ra / 10];
      band_abstained[ra / 10] += abstained ? 1 : 0;
    }
  }
  auto rate = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  s.overall_rate = rate(s.abstained, s.pairs);
  s.top10_rate = rate(top10_abstained, s.top10_pairs);
  for (std::size_t b = 0; b < bands; ++b) {
    s.band_rates.push_back(rate(band_abstained[b], s.band_pairs[b]));
  }
  return board;
}

std::optional<double> false_ranking_rate(std::span<const RankDecision> decisions,
                                         std::span<const std::string> agent_ids,
                                         std::span<const double> true_values) {
  require(agent_ids.size() == true_values.size(), "truth table is not aligned");
  std::map<std::string, double> truth;
  for (std::size_t i = 0; i < agent_ids.size(); ++i) {
    truth[agent_ids[i]] = true_values[i];
  }
  std::size_t ranked = 0;
  std::size_t wrong = 0;
  for (const auto& d : decisions) {
    if (d.decision == Decision::Abstain) {
      continue;
    }
    const auto a = truth.find(d.pair.first);
    const auto b = truth.find(d.pair.second);
    require(a != truth.end() && b != truth.end(), "pair agent missing from the truth table");
    const double true_diff = a->second - b->second;
    ++ranked;
    const bool correct = d.decision == Decision::FirstAbove ? true_diff > 0.0 : true_diff < 0.0;
    wrong += correct ? 0 : 1;
  }
  if (ranked == 0) {
    return std::nullopt;
  }
  return static_cast<double>(wrong) / static_cast<double>(ranked);
}

}  // namespace pulsecal::ranking
