#include "pulsecal/harness/csv_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "pulsecal/error.hpp"

namespace pulsecal::harness {
namespace {

namespace fs = std::filesystem;

constexpr std::array<const char*, scorekit::kFactorCount> kFactorNames{
    "benchmark", "adoption", "sentiment", "ecosystem"};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_table(const fs::path& path, const std::vector<std::string>& expected) {
  std::ifstream in(path);
  if (!in) {
    throw IoError(fmt::format("cannot read '{}'", path.string()));
  }
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError(fmt::format("'{}' is empty", path.string()));
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  table.header = split_csv_line(line);
  if (table.header != expected) {
    throw IoError(fmt::format("'{}' has header '{}', expected '{}'", path.string(), line,
                              fmt::join(expected, ",")));
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    auto cells = split_csv_line(line);
    if (cells.size() != expected.size()) {
      throw IoError(fmt::format("'{}' line {}: expected {} fields, got {}", path.string(),
                                line_no, expected.size(), cells.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

double parse_number(const std::string& text, const fs::path& path) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw IoError(fmt::format("'{}': '{}' is not a number", path.string(), text));
  }
  return value;
}

std::size_t parse_index(const std::string& text, const fs::path& path) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw IoError(fmt::format("'{}': '{}' is not an index", path.string(), text));
  }
  return value;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError(fmt::format("cannot write '{}'", path.string()));
  }
  return out;
}

}  // namespace

const AgentInfo* Dataset::agent(const std::string& id) const {
  for (const auto& info : agents) {
    if (info.agent_id == id) {
      return &info;
    }
  }
  return nullptr;
}

double Dataset::sigma_cross(const std::string& id) const {
  if (const auto* info = agent(id)) {
    return info->sigma_cross;
  }
  for (const auto& set : platforms) {
    if (set.agent_id == id && set.scores.size() >= 2) {
      return scorekit::cross_source_divergence(set);
    }
  }
  return 0.0;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

std::string format_number(double x) { return fmt::format("{}", x); }

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) {
    throw IoError(fmt::format("failed writing '{}'", path.string()));
  }
}

void write_series(const fs::path& path, const std::vector<ScoreSeries>& series) {
  std::string text = "agent_id,hour,score\n";
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      text += fmt::format("{},{},{}\n", s.agent_id, s.hours[i], s.scores[i]);
    }
  }
  write_text(path, text);
}

std::vector<ScoreSeries> read_series(const fs::path& path) {
  const auto table = read_table(path, {"agent_id", "hour", "score"});
  std::map<std::string, ScoreSeries> by_agent;
  for (const auto& row : table.rows) {
    auto& s = by_agent[row[0]];
    s.agent_id = row[0];
    s.hours.push_back(parse_number(row[1], path));
    s.scores.push_back(parse_number(row[2], path));
  }
  std::vector<ScoreSeries> out;
  for (auto& [id, s] : by_agent) {
    try {
      s.validate();
    } catch (const InvalidInput& e) {
      throw IoError(fmt::format("'{}': agent {}: {}", path.string(), id, e.what()));
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_platforms(const fs::path& path,
                     const std::vector<scorekit::PlatformScoreSet>& platforms) {
  std::string text = "agent_id,platform_id,score\n";
  for (const auto& set : platforms) {
    for (const auto& [platform, score] : set.scores) {
      text += fmt::format("{},{},{}\n", set.agent_id, platform, score);
    }
  }
  write_text(path, text);
}

std::vector<scorekit::PlatformScoreSet> read_platforms(const fs::path& path) {
  const auto table = read_table(path, {"agent_id", "platform_id", "score"});
  std::map<std::string, scorekit::PlatformScoreSet> by_agent;
  for (const auto& row : table.rows) {
    auto& set = by_agent[row[0]];
    set.agent_id = row[0];
    set.scores[row[1]] = parse_number(row[2], path);
  }
  std::vector<scorekit::PlatformScoreSet> out;
  for (auto& [id, set] : by_agent) {
    out.push_back(std::move(set));
  }
  return out;
}

void write_agents(const fs::path& path, const std::vector<AgentInfo>& agents) {
  std::string text = "agent_id,class,true_mean,sigma_cross\n";
  for (const auto& a : agents) {
    text += fmt::format("{},{},{},{}\n", a.agent_id, a.agent_class,
                        a.true_mean ? format_number(*a.true_mean) : std::string{},
                        a.sigma_cross);
  }
  write_text(path, text);
}

std::vector<AgentInfo> read_agents(const fs::path& path) {
  const auto table = read_table(path, {"agent_id", "class", "true_mean", "sigma_cross"});
  std::vector<AgentInfo> out;
  for (const auto& row : table.rows) {
    AgentInfo info;
    info.agent_id = row[0];
    info.agent_class = row[1];
    if (!row[2].empty()) {
      info.true_mean = parse_number(row[2], path);
    }
    info.sigma_cross = parse_number(row[3], path);
    out.push_back(std::move(info));
  }
  std::sort(out.begin(), out.end(),
            [](const AgentInfo& a, const AgentInfo& b) { return a.agent_id < b.agent_id; });
  return out;
}

void write_events(const fs::path& path, const std::vector<EventRecord>& events) {
  std::string text = "agent_id,event_index,jump,multiplier\n";
  for (const auto& e : events) {
    text += fmt::format("{},{},{},{}\n", e.agent_id, e.event_index, e.jump, e.multiplier);
  }
  write_text(path, text);
}

std::vector<EventRecord> read_events(const fs::path& path) {
  const auto table = read_table(path, {"agent_id", "event_index", "jump", "multiplier"});
  std::vector<EventRecord> out;
  for (const auto& row : table.rows) {
    out.push_back({row[0], parse_index(row[1], path), parse_number(row[2], path),
                   parse_number(row[3], path)});
  }
  return out;
}

void write_factors(const fs::path& path, const std::vector<FactorRecord>& factors) {
  std::string text = fmt::format("agent_id,{}\n", fmt::join(kFactorNames, ","));
  for (const auto& record : factors) {
    text += record.agent_id;
    for (std::size_t f = 0; f < scorekit::kFactorCount; ++f) {
      text += ',';
      if (!record.factors.missing[f]) {
        text += format_number(record.factors.values[f]);
      }
    }
    text += '\n';
  }
  write_text(path, text);
}

std::vector<FactorRecord> read_factors(const fs::path& path) {
  std::vector<std::string> header{"agent_id"};
  header.insert(header.end(), kFactorNames.begin(), kFactorNames.end());
  const auto table = read_table(path, header);
  std::vector<FactorRecord> out;
  for (const auto& row : table.rows) {
    FactorRecord record;
    record.agent_id = row[0];
    for (std::size_t f = 0; f < scorekit::kFactorCount; ++f) {
      if (row[f + 1].empty()) {
        record.factors.missing[f] = true;
        record.factors.values[f] = scorekit::kMissingFactorValue;
      } else {
        record.factors.values[f] = parse_number(row[f + 1], path);
      }
    }
    try {
      record.factors.validate();
    } catch (const InvalidInput& e) {
      throw IoError(fmt::format("'{}': agent {}: {}", path.string(), record.agent_id, e.what()));
    }
    out.push_back(std::move(record));
  }
  return out;
}

Dataset dataset_from_population(const simgen::Population& population,
                                std::vector<scorekit::FactorVector> factors) {
  require(factors.size() == population.series.size(), "one factor vector per agent is required");
  Dataset data;
  data.series = population.series;
  data.platforms = population.platforms;
  for (std::size_t i = 0; i < population.series.size(); ++i) {
    const auto& id = population.series[i].agent_id;
    data.agents.push_back({id, std::string(simgen::to_string(population.classes[i])),
                           population.true_means[i], population.sigma_cross[i]});
    data.factors.push_back({id, factors[i]});
    if (i < population.events.size() && population.events[i]) {
      const auto& e = *population.events[i];
      data.events.push_back({id, e.time, e.jump, e.innovation_multiplier});
    }
  }
  return data;
}

void write_dataset(const fs::path& dir, const Dataset& data) {
  fs::create_directories(dir);
  write_series(dir / kSeriesFile, data.series);
  if (!data.platforms.empty()) {
    write_platforms(dir / kPlatformFile, data.platforms);
  }
  if (!data.agents.empty()) {
    write_agents(dir / kAgentFile, data.agents);
  }
  if (!data.events.empty()) {
    write_events(dir / kEventFile, data.events);
  }
  if (!data.factors.empty()) {
    write_factors(dir / kFactorFile, data.factors);
  }
}

Dataset read_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw IoError(fmt::format("data directory '{}' does not exist", dir.string()));
  }
  Dataset data;
  const auto series_path = dir / kSeriesFile;
  if (!fs::exists(series_path)) {
    throw IoError(fmt::format("'{}' is missing", series_path.string()));
  }
  data.series = read_series(series_path);
  if (fs::exists(dir / kPlatformFile)) {
    data.platforms = read_platforms(dir / kPlatformFile);
  }
  if (fs::exists(dir / kAgentFile)) {
    data.agents = read_agents(dir / kAgentFile);
  }
  if (fs::exists(dir / kEventFile)) {
    data.events = read_events(dir / kEventFile);
  }
  if (fs::exists(dir / kFactorFile)) {
    data.factors = read_factors(dir / kFactorFile);
  }
  return data;
}

}  // namespace pulsecal::harness
