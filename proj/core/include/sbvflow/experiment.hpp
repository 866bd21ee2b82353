#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sbvflow/geometry.hpp"
#include "sbvflow/operators.hpp"
#include "sbvflow/solver.hpp"

namespace sbvflow {

struct DomainSpec {
  struct Term {
    double weight = 1.0;
    EllipseParams ellipse;
  };
  /// "ellipse" uses terms[0].ellipse; "blend" combines all terms.
  std::string kind = "ellipse";
  std::vector<Term> terms{Term{}};

  static DomainSpec ellipse(double a, double b, Vec2 center = Vec2::Zero(), double angle = 0.0);
  ConvexDomain build() const;
};

struct InitialSpec {
  /// "quadratic": the affine transport map between the two quadrics.
  /// "quadratic-perturbed": that map plus amplitude * h_source^2 * (1 + c.x),
  /// with c drawn from the seed. The perturbation leaves Du on the boundary
  /// unchanged.
  std::string kind = "quadratic";
  double amplitude = 0.0;
  /// Multiplies the quadratic part; values below 1 shrink the gradient image.
  double scale = 1.0;
  /// Additive constant.
  double offset = 0.0;
};

struct ExperimentConfig {
  std::string name = "custom";
  DomainSpec source;
  DomainSpec target;
  TauPreset tau = TauPreset::kTau0;
  double spacing = 1.0 / 32.0;
  double sigma = 0.4;
  double t_max = 20.0;
  long max_steps = 2'000'000;
  double convergence_tolerance = 1e-4;
  double boundary_tolerance = 1e-10;
  int burn_in_steps = 10;
  int record_interval = 20;
  std::string output_dir;
  InitialSpec initial;
  std::uint64_t seed = 1;
  BoundaryStencilKind stencil = BoundaryStencilKind::kQuadraticFit;
  /// Negative selects 20 h^2.
  double duality_tolerance = -1.0;

  /// Throws ConfigError on any non-positive tolerance, spacing or time.
  void validate() const;
  RunOptions run_options() const;
  double effective_duality_tolerance() const;
};

/// Parses a JSON configuration; unknown keys and malformed values throw ConfigError.
ExperimentConfig parse_config(std::string_view json_text);
std::string config_to_json(const ExperimentConfig& config);

/// Bundled presets: {ma-urbas, warren-pi4, brendle-warren} x
/// {disk, disk-scaled, disk-ellipse, ellipse, ellipse-perturbed}.
std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
ExperimentConfig preset(std::string_view name);
bool is_preset(std::string_view name);

/// Symmetric A and shift b with D(x -> x^T A x / 2 + b.x) mapping the source
/// quadric onto the target quadric. Throws ConfigError when either domain is
/// not a quadric.
struct AffineMap {
  Mat2 matrix;
  Vec2 shift;
};
AffineMap transport_map(const ConvexDomain& source, const ConvexDomain& target);

GridField initial_field(const ExperimentConfig& config, const FlowProblem& problem);

struct ExperimentRun {
  ExperimentConfig config;
  FlowProblem problem;
  FlowResult result;
};

/// Builds domains, profile, grid and initial data, then runs the flow.
/// Throws ConfigError / ResolutionError / InvalidDomainError for bad input.
ExperimentRun run_experiment(const ExperimentConfig& config, const StepObserver& observer = {});

FlowProblem make_problem(const ExperimentConfig& config);

}  // namespace sbvflow
