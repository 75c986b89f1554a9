#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pulsecal::harness {

// Every knob a run can set. Files are flat `key = value` lines; lists are
// comma separated and `#` starts a comment.
struct RunConfig {
  std::string experiment = "default";
  std::optional<std::uint64_t> seed;
  std::string data_dir;
  std::string out_dir = "out";

  // simulate
  std::size_t stable_agents = 35;
  std::size_t volatile_agents = 15;
  std::size_t length = 3000;
  std::size_t platforms = 9;
  double generator_reversion_rate = 0.003;
  double stable_innovation = 0.004;
  double volatile_innovation = 0.012;
  double stable_divergence = 0.015;
  double volatile_divergence = 0.08;
  double mean_low = 0.35;
  double mean_high = 0.65;
  double tail_df = 0.0;
  double factor_missing_rate = 0.0;
  std::size_t shift_agents = 0;
  std::size_t shift_time = 0;
  double shift_jump = 0.1;
  double shift_multiplier = 2.0;

  // forecasting and calibration
  double reversion_rate = 0.003;
  double train_fraction = 0.7;
  double test_fraction = 0.25;
  double alpha = 0.2;
  double gamma = 0.01;
  double mondrian_threshold = 0.04;
  std::vector<double> levels{0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
  std::vector<std::size_t> horizons{1, 6, 24, 48, 72};
  std::size_t curve_horizon = 24;
  std::size_t resamples = 1000;

  // shift-study
  std::size_t shift_horizon = 1;
  std::size_t pre_window = 500;
  std::size_t final_window = 1000;

  // rank
  std::size_t rank_horizon = 24;
  double fdr_q = 0.2;

  // pipeline
  std::vector<double> stage_sigmas{0.031, 0.065};
  std::vector<double> rho_grid{-0.5, -0.4, -0.3, -0.2, -0.1, 0.0, 0.1,
                               0.2,  0.3,  0.4,  0.5,  0.6,  0.7, 0.8, 0.9};
  std::size_t samples = 100000;

  // sensitivity
  std::vector<double> concentrations{2, 5, 10, 20, 50};
  std::size_t draws = 1000;
  double perturbation_delta = 0.10;
  int rank_window = 0;
  std::size_t bootstrap_window = 168;
  double ci_level = 0.9;

  bool operator==(const RunConfig&) const = default;

  // Throws InvalidInput on out-of-range values or a missing seed.
  void validate() const;
  std::uint64_t require_seed() const;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Applies one key; throws InvalidInput for unknown keys or malformed values.
void apply_key(RunConfig& config, std::string_view key, std::string_view value);

RunConfig parse_config(std::string_view text);
// Throws IoError when the file cannot be read.
RunConfig load_config(const std::filesystem::path& path);

// Canonical key order; every key is present except an unset seed.
KeyValues to_key_values(const RunConfig& config);
std::string format_config(const RunConfig& config);

}  // namespace pulsecal::harness
