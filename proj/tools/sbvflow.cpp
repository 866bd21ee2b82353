#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sbvflow/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Parabolic flows with the second boundary condition on planar convex domains"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  int jobs = 1;
  std::uint64_t seed = 1;
  bool run_all = false;

  auto* run = app.add_subcommand("run", "Run one experiment (config file or preset name)");
  run->add_option("--config", config, "JSON config file or preset name")->required();
  run->add_option("--out", out, "Run directory (overrides output_dir)");
  run->add_option("--seed", seed, "Random seed for perturbed initial data");

  auto* check = app.add_subcommand("check-operators", "Sampled property suite of the operator presets");
  check->add_option("--seed", seed, "Sampling seed");

  auto* leg = app.add_subcommand("legendre-test", "Duality metrics for a finished run");
  leg->add_option("--config", config, "Config file or preset name of the run");
  leg->add_option("--out", out, "Run directory");

  auto* presets = app.add_subcommand("presets", "List bundled presets or run them all");
  presets->add_flag("--run", run_all, "Run every preset");
  presets->add_option("--out", out, "Root directory for preset runs");
  presets->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  presets->add_option("--seed", seed, "Random seed for perturbed initial data");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sbvflow::kExitInvalidConfig;
  }

  auto optional_path = [&]() -> std::optional<std::filesystem::path> {
    if (out.empty()) return std::nullopt;
    return std::filesystem::path(out);
  };
  auto optional_seed = [&](CLI::App* sub) -> std::optional<std::uint64_t> {
    if (sub->count("--seed") == 0) return std::nullopt;
    return seed;
  };

  if (*run) return sbvflow::run_command({config, optional_path(), optional_seed(run)}, std::cout);
  if (*check) return sbvflow::check_operators_command(seed, std::cout);
  if (*leg) {
    std::optional<std::string> cfg;
    if (!config.empty()) cfg = config;
    return sbvflow::legendre_test_command({cfg, optional_path()}, std::cout);
  }
  return sbvflow::presets_command(run_all, optional_path(), jobs, optional_seed(presets), std::cout);
}
