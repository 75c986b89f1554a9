#include "pulsecal/harness/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "pulsecal/error.hpp"

namespace pulsecal::harness {
namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view key, std::string_view text) {
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw InvalidInput(fmt::format("{}: '{}' is not a number", key, text));
  }
  return value;
}

template <typename T>
T parse_integer(std::string_view key, std::string_view text) {
  text = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw InvalidInput(fmt::format("{}: '{}' is not a valid integer", key, text));
  }
  return value;
}

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view key, std::string_view text, Parse parse) {
  std::vector<T> out;
  text = trim(text);
  if (text.empty()) {
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string_view::npos ? text.size() - start
                                                                         : comma - start);
    out.push_back(parse(key, item));
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  return fmt::format("{}", fmt::join(xs, ","));
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Field {
  std::string_view key;
  Setter set;
  Getter get;
};

template <auto Member>
Field size_field(std::string_view key) {
  return {key,
          [](RunConfig& c, std::string_view k, std::string_view v) {
            c.*Member = parse_integer<std::size_t>(k, v);
          },
          [](const RunConfig& c) { return fmt::format("{}", c.*Member); }};
}

template <auto Member>
Field double_field(std::string_view key) {
  return {key,
          [](RunConfig& c, std::string_view k, std::string_view v) {
            c.*Member = parse_double(k, v);
          },
          [](const RunConfig& c) { return fmt::format("{}", c.*Member); }};
}

template <auto Member>
Field string_field(std::string_view key) {
  return {key,
          [](RunConfig& c, std::string_view, std::string_view v) { c.*Member = std::string(trim(v)); },
          [](const RunConfig& c) { return c.*Member; }};
}

template <auto Member>
Field double_list_field(std::string_view key) {
  return {key,
          [](RunConfig& c, std::string_view k, std::string_view v) {
            c.*Member = parse_list<double>(k, v, parse_double);
          },
          [](const RunConfig& c) { return join(c.*Member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      string_field<&RunConfig::experiment>("experiment"),
      {"seed",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.seed = parse_integer<std::uint64_t>(k, v);
       },
       [](const RunConfig& c) { return c.seed ? fmt::format("{}", *c.seed) : std::string{}; }},
      string_field<&RunConfig::data_dir>("data_dir"),
      string_field<&RunConfig::out_dir>("out_dir"),
      size_field<&RunConfig::stable_agents>("stable_agents"),
      size_field<&RunConfig::volatile_agents>("volatile_agents"),
      size_field<&RunConfig::length>("length"),
      size_field<&RunConfig::platforms>("platforms"),
      double_field<&RunConfig::generator_reversion_rate>("generator_reversion_rate"),
      double_field<&RunConfig::stable_innovation>("stable_innovation"),
      double_field<&RunConfig::volatile_innovation>("volatile_innovation"),
      double_field<&RunConfig::stable_divergence>("stable_divergence"),
      double_field<&RunConfig::volatile_divergence>("volatile_divergence"),
      double_field<&RunConfig::mean_low>("mean_low"),
      double_field<&RunConfig::mean_high>("mean_high"),
      double_field<&RunConfig::tail_df>("tail_df"),
      double_field<&RunConfig::factor_missing_rate>("factor_missing_rate"),
      size_field<&RunConfig::shift_agents>("shift_agents"),
      size_field<&RunConfig::shift_time>("shift_time"),
      double_field<&RunConfig::shift_jump>("shift_jump"),
      double_field<&RunConfig::shift_multiplier>("shift_multiplier"),
      double_field<&RunConfig::reversion_rate>("reversion_rate"),
      double_field<&RunConfig::train_fraction>("train_fraction"),
      double_field<&RunConfig::test_fraction>("test_fraction"),
      double_field<&RunConfig::alpha>("alpha"),
      double_field<&RunConfig::gamma>("gamma"),
      double_field<&RunConfig::mondrian_threshold>("mondrian_threshold"),
      double_list_field<&RunConfig::levels>("levels"),
      {"horizons",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.horizons = parse_list<std::size_t>(k, v, parse_integer<std::size_t>);
       },
       [](const RunConfig& c) { return join(c.horizons); }},
      size_field<&RunConfig::curve_horizon>("curve_horizon"),
      size_field<&RunConfig::resamples>("resamples"),
      size_field<&RunConfig::shift_horizon>("shift_horizon"),
      size_field<&RunConfig::pre_window>("pre_window"),
      size_field<&RunConfig::final_window>("final_window"),
      size_field<&RunConfig::rank_horizon>("rank_horizon"),
      double_field<&RunConfig::fdr_q>("fdr_q"),
      double_list_field<&RunConfig::stage_sigmas>("stage_sigmas"),
      double_list_field<&RunConfig::rho_grid>("rho_grid"),
      size_field<&RunConfig::samples>("samples"),
      double_list_field<&RunConfig::concentrations>("concentrations"),
      size_field<&RunConfig::draws>("draws"),
      double_field<&RunConfig::perturbation_delta>("perturbation_delta"),
      {"rank_window",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.rank_window = parse_integer<int>(k, v);
       },
       [](const RunConfig& c) { return fmt::format("{}", c.rank_window); }},
      size_field<&RunConfig::bootstrap_window>("bootstrap_window"),
      double_field<&RunConfig::ci_level>("ci_level"),
  };
  return table;
}

bool open_unit(double x) { return x > 0.0 && x < 1.0; }

}  // namespace

void apply_key(RunConfig& config, std::string_view key, std::string_view value) {
  for (const auto& field : fields()) {
    if (field.key == key) {
      field.set(config, key, value);
      return;
    }
  }
  throw InvalidInput(fmt::format("unknown config key '{}'", key));
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) {
      continue;
    }
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidInput(fmt::format("line {}: expected key = value", line_no));
    }
    apply_key(config, trim(view.substr(0, eq)), trim(view.substr(eq + 1)));
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError(fmt::format("cannot read config '{}'", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

KeyValues to_key_values(const RunConfig& config) {
  KeyValues out;
  for (const auto& field : fields()) {
    if (field.key == "seed" && !config.seed) {
      continue;
    }
    out.emplace_back(std::string(field.key), field.get(config));
  }
  return out;
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const auto& [key, value] : to_key_values(config)) {
    out += fmt::format("{} = {}\n", key, value);
  }
  return out;
}

std::uint64_t RunConfig::require_seed() const {
  require(seed.has_value(), "a seed is required (config key 'seed' or --seed)");
  return *seed;
}

void RunConfig::validate() const {
  require_seed();
  require(!out_dir.empty(), "out_dir must not be empty");
  require(stable_agents + volatile_agents >= 1, "at least one agent is required");
  require(length >= 1, "length must be at least 1");
  require(platforms >= 2, "platforms must be at least 2");
  require(open_unit(train_fraction), "train_fraction must lie in (0, 1)");
  require(open_unit(test_fraction), "test_fraction must lie in (0, 1)");
  require(open_unit(alpha), "alpha must lie in (0, 1)");
  require(open_unit(fdr_q), "fdr_q must lie in (0, 1)");
  require(open_unit(ci_level), "ci_level must lie in (0, 1)");
  require(gamma > 0.0, "gamma must be positive");
  require(mondrian_threshold > 0.0, "mondrian_threshold must be positive");
  require(reversion_rate >= 0.0 && reversion_rate <= 1.0, "reversion_rate must lie in [0, 1]");
  require(factor_missing_rate >= 0.0 && factor_missing_rate < 1.0,
          "factor_missing_rate must lie in [0, 1)");
  require(!levels.empty(), "levels must not be empty");
  for (double level : levels) {
    require(open_unit(level), "every level must lie in (0, 1)");
  }
  require(!horizons.empty(), "horizons must not be empty");
  for (std::size_t h : horizons) {
    require(h >= 1, "horizons must be positive");
  }
  require(curve_horizon >= 1 && shift_horizon >= 1 && rank_horizon >= 1,
          "horizons must be positive");
  require(resamples >= 100, "resamples must be at least 100");
  require(stage_sigmas.size() >= 2, "stage_sigmas needs at least two stages");
  for (double s : stage_sigmas) {
    require(s >= 0.0, "stage sigmas must be >= 0");
  }
  require(!rho_grid.empty(), "rho_grid must not be empty");
  for (double rho : rho_grid) {
    require(rho >= -1.0 && rho <= 1.0, "every rho must lie in [-1, 1]");
  }
  require(samples >= 2, "samples must be at least 2");
  require(!concentrations.empty(), "concentrations must not be empty");
  for (double k : concentrations) {
    require(k > 0.0, "concentrations must be positive");
  }
  require(draws >= 1, "draws must be at least 1");
  require(perturbation_delta > 0.0, "perturbation_delta must be positive");
  require(rank_window >= 0, "rank_window must be >= 0");
  require(bootstrap_window >= 2, "bootstrap_window must be at least 2");
  require(shift_multiplier > 0.0, "shift_multiplier must be positive");
}

}  // namespace pulsecal::harness
