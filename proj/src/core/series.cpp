#include "pulsecal/series.hpp"

#include <cmath>

#include "pulsecal/error.hpp"

namespace pulsecal {

void ScoreSeries::validate() const {
  require(hours.size() == scores.size(),
          "series '" + agent_id + "': hours and scores differ in length");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = scores[i];
    require(std::isfinite(s) && s >= 0.0 && s <= 1.0,
            "series '" + agent_id + "': score outside [0, 1]");
    if (i > 0) {
      require(hours[i] > hours[i - 1], "series '" + agent_id + "': hours not strictly increasing");
    }
  }
}

ScoreSeries ScoreSeries::from_scores(std::string agent_id, std::vector<double> scores,
                                     double first_hour) {
  ScoreSeries out;
  out.agent_id = std::move(agent_id);
  out.hours.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.hours[i] = first_hour + static_cast<double>(i);
  }
  out.scores = std::move(scores);
  return out;
}

}  // namespace pulsecal
