#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pulsecal/scorekit.hpp"
#include "pulsecal/series.hpp"
#include "pulsecal/simgen.hpp"

namespace pulsecal::harness {

// Per-agent metadata from agents.csv. Class and true mean are only known for
// simulated data.
struct AgentInfo {
  std::string agent_id;
  std::string agent_class;
  std::optional<double> true_mean;
  double sigma_cross = 0.0;
};

struct EventRecord {
  std::string agent_id;
  std::size_t event_index = 0;
  double jump = 0.0;
  double multiplier = 1.0;
};

struct FactorRecord {
  std::string agent_id;
  scorekit::FactorVector factors;
};

// Everything a command may consume. Series are sorted by agent id.
struct Dataset {
  std::vector<ScoreSeries> series;
  std::vector<scorekit::PlatformScoreSet> platforms;
  std::vector<AgentInfo> agents;
  std::vector<EventRecord> events;
  std::vector<FactorRecord> factors;

  const AgentInfo* agent(const std::string& id) const;
  // sigma_cross from agents.csv, else recomputed from platforms.csv, else 0.
  double sigma_cross(const std::string& id) const;
};

inline constexpr const char* kSeriesFile = "scores.csv";
inline constexpr const char* kPlatformFile = "platforms.csv";
inline constexpr const char* kAgentFile = "agents.csv";
inline constexpr const char* kEventFile = "events.csv";
inline constexpr const char* kFactorFile = "factors.csv";

// Splits one CSV line on commas (no quoting; ids never contain commas).
std::vector<std::string> split_csv_line(const std::string& line);
// Formats a double with the shortest representation that round-trips.
std::string format_number(double x);

void write_text(const std::filesystem::path& path, const std::string& text);

void write_series(const std::filesystem::path& path, const std::vector<ScoreSeries>& series);
std::vector<ScoreSeries> read_series(const std::filesystem::path& path);

void write_platforms(const std::filesystem::path& path,
                     const std::vector<scorekit::PlatformScoreSet>& platforms);
std::vector<scorekit::PlatformScoreSet> read_platforms(const std::filesystem::path& path);

void write_agents(const std::filesystem::path& path, const std::vector<AgentInfo>& agents);
std::vector<AgentInfo> read_agents(const std::filesystem::path& path);

void write_events(const std::filesystem::path& path, const std::vector<EventRecord>& events);
std::vector<EventRecord> read_events(const std::filesystem::path& path);

void write_factors(const std::filesystem::path& path, const std::vector<FactorRecord>& factors);
std::vector<FactorRecord> read_factors(const std::filesystem::path& path);

// Dataset from a simulated population, with factors for every agent.
Dataset dataset_from_population(const simgen::Population& population,
                                std::vector<scorekit::FactorVector> factors);

void write_dataset(const std::filesystem::path& dir, const Dataset& data);
// scores.csv is mandatory (IoError when absent); the other files are optional.
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace pulsecal::harness
