#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sbvflow/experiment.hpp"
#include "sbvflow/operators.hpp"

namespace sbvflow {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitInvalidConfig = 2,
  kExitInvariantViolation = 3,
  kExitMaxTime = 4,
};

/// Resolves a config argument: an existing JSON file, otherwise a preset name.
/// Throws ConfigError when neither applies.
ExperimentConfig load_config(const std::string& config_or_preset);

struct RunRequest {
  std::string config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
};

/// Runs one experiment and writes config.json, timeseries.csv, final_u.csv
/// and summary.json into the run directory.
int run_command(const RunRequest& request, std::ostream& log);

/// Property suite for each profile. Exit 0 when every gating check passes,
/// 3 otherwise.
int check_operators_command(const std::vector<EigenProfile>& profiles, std::uint64_t seed, std::ostream& log);
int check_operators_command(std::uint64_t seed, std::ostream& log);

struct LegendreRequest {
  std::optional<std::string> config;
  std::optional<std::filesystem::path> out;
};

/// Conjugates a finished run's final field and appends duality metrics to its
/// summary.json. Exit 2 for missing or corrupt artifacts.
int legendre_test_command(const LegendreRequest& request, std::ostream& log);

/// Lists presets, or runs all of them under `out` with up to `jobs` threads.
int presets_command(bool run, const std::optional<std::filesystem::path>& out, int jobs,
                    std::optional<std::uint64_t> seed, std::ostream& log);

}  // namespace sbvflow
