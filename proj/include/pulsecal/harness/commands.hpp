#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "pulsecal/harness/config.hpp"

namespace pulsecal::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidConfig = 1;
inline constexpr int kExitIo = 2;

// simulate, calibrate, shift-study, rank, pipeline, sensitivity.
const std::vector<std::string>& command_names();

/// Runs one command with a fully resolved config, writing its artifacts and
/// manifest.json into config.out_dir. Exceptions propagate.
void execute(std::string_view command, const RunConfig& config, std::ostream& log);

/// `pulsecal <command> --config <path> [--seed N] [--out DIR] [--data DIR]`.
/// Returns the process exit code; errors go to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pulsecal::harness
