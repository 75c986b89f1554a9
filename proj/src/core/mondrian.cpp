#include <utility>

#include "pulsecal/conformal.hpp"
#include "pulsecal/error.hpp"

namespace pulsecal::conformal {

std::string_view to_string(Stratum stratum) {
  return stratum == Stratum::Stable ? "stable" : "volatile";
}

Stratum classify(double sigma_cross, double threshold) {
  return sigma_cross < threshold ? Stratum::Stable : Stratum::Volatile;
}

StratumMap::StratumMap(double threshold, std::map<std::string, Stratum> assignment,
                       CalibrationSet stable, CalibrationSet volatile_set, CalibrationSet pooled,
                       bool stable_fallback, bool volatile_fallback)
    : threshold_(threshold),
      assignment_(std::move(assignment)),
      stable_(std::move(stable)),
      volatile_(std::move(volatile_set)),
      pooled_(std::move(pooled)),
      stable_fallback_(stable_fallback),
      volatile_fallback_(volatile_fallback) {}

Stratum StratumMap::stratum_of(const std::string& agent_id) const {
  const auto it = assignment_.find(agent_id);
  require(it != assignment_.end(), "agent '" + agent_id + "' has no stratum");
  return it->second;
}

const CalibrationSet& StratumMap::calibration(Stratum stratum) const {
  if (fell_back(stratum)) {
    return pooled_;
  }
  return stratum == Stratum::Stable ? stable_ : volatile_;
}

StratumMap mondrian_calibrate(std::span<const AgentResiduals> agents, double threshold) {
  require(threshold > 0.0, "stratum threshold must be positive");
  require(!agents.empty(), "Mondrian calibration needs at least one agent");
  std::map<std::string, Stratum> assignment;
  std::vector<double> stable;
  std::vector<double> volatile_residuals;
  std::vector<double> pooled;
  for (const auto& agent : agents) {
    require(!agent.residuals.empty(), "agent '" + agent.agent_id + "' has no residuals");
    const Stratum stratum = classify(agent.sigma_cross, threshold);
    require(assignment.emplace(agent.agent_id, stratum).second,
            "agent '" + agent.agent_id + "' listed twice");
    auto& target = stratum == Stratum::Stable ? stable : volatile_residuals;
    target.insert(target.end(), agent.residuals.begin(), agent.residuals.end());
    pooled.insert(pooled.end(), agent.residuals.begin(), agent.residuals.end());
  }
  const bool stable_fallback = stable.empty();
  const bool volatile_fallback = volatile_residuals.empty();
  return StratumMap(threshold, std::move(assignment), CalibrationSet(std::move(stable)),
                    CalibrationSet(std::move(volatile_residuals)),
                    CalibrationSet(std::move(pooled)), stable_fallback, volatile_fallback);
}

}  // namespace pulsecal::conformal
