#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pulsecal {

// Hourly score history for one agent. Timestamps are hours since epoch.
struct ScoreSeries {
  std::string agent_id;
  std::vector<double> hours;
  std::vector<double> scores;

  std::size_t size() const { return scores.size(); }
  bool empty() const { return scores.empty(); }
  std::span<const double> values() const { return scores; }

  // Throws InvalidInput unless hours are strictly increasing and scores lie in [0, 1].
  void validate() const;

  static ScoreSeries from_scores(std::string agent_id, std::vector<double> scores,
                                 double first_hour = 0.0);
};

}  // namespace pulsecal
