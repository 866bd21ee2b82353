#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sbvflow/diagnostics.hpp"
#include "sbvflow/field.hpp"
#include "sbvflow/operators.hpp"
#include "sbvflow/stencil.hpp"

namespace sbvflow {

struct StepReport {
  double dt = 0.0;
  double max_update = 0.0;
  int newton_iterations = 0;
  double boundary_residual = 0.0;
};

struct BoundaryOptions {
  double tolerance = 1e-10;
  int max_iterations = 100;
  double derivative_threshold = 1e-12;
};

/// Forward Euler u <- u + dt F(D^2 u) at Interior nodes. Boundary values are
/// copied unchanged. Throws ConvexityLossError when the smallest Hessian
/// eigenvalue at some node is <= `min_eigenvalue`.
GridField interior_step(const GridField& field, const GridDiscretization& grid, const EigenProfile& profile,
                        double dt, double min_eigenvalue = 0.0);

/// Adjusts every Boundary node value so that h~(Du) = 0 at its projected
/// boundary point. Each node solves a scalar equation by Newton's method with
/// a bracketing fallback. Throws BoundaryProjectionError when both fail.
StepReport enforce_boundary(GridField& field, const Discretization& source, const ConvexDomain& target,
                            const BoundaryOptions& options = {});

/// sigma h^2 / (2 max_nodes trace F^{ij}).
double stable_dt(const GridField& field, const EigenProfile& profile, const GridDiscretization& grid,
                 double sigma = 0.4);

enum class Termination { kConverged, kMaxTime, kInvariantViolation };
std::string_view to_string(Termination termination);

struct FlowSummary {
  double c_infty = kNaN;
  double c_infty_crosscheck = kNaN;
  double stat_residual = kNaN;
  double hausdorff = kNaN;
  long steps = 0;
  double final_time = 0.0;
  Termination termination = Termination::kMaxTime;
  std::string message;
};

struct MeanSample {
  double t;
  double mean_u;
};

struct CInftyEstimate {
  double slope;
  /// slope minus the late-time spatial mean of F(D^2 u).
  double discrepancy;
};

/// Least-squares slope of mean u against t. Throws InsufficientDataError
/// for fewer than two samples.
CInftyEstimate estimate_c_infty(std::span<const MeanSample> window, double late_mean_F);

/// Verdict of one invariant suite over a whole run.
struct SuiteVerdict {
  std::string name;
  bool pass = true;
  bool gating = true;
  double value = kNaN;      // worst measured quantity
  double threshold = kNaN;  // bound it was compared with
  std::string note;
};

struct RunOptions {
  double spacing = 1.0 / 32.0;
  double sigma = 0.4;
  double t_max = 10.0;
  long max_steps = 2'000'000;
  double convergence_tolerance = 1e-4;
  BoundaryOptions boundary;
  int burn_in_steps = 10;
  int record_interval = 20;
  int c_infty_window = 10;
  double convexity_floor = 1e-6;
  /// Negative values select the defaults interior_slack / boundary_slack.
  double interior_slack = -1.0;
  double boundary_slack = -1.0;
  BoundaryStencilKind stencil = BoundaryStencilKind::kQuadraticFit;
  /// Stop at the first invariant violation after burn-in.
  bool stop_on_violation = true;
};

struct FlowResult {
  std::vector<DiagnosticsRecord> trajectory;
  FlowSummary summary;
  std::vector<SuiteVerdict> checks;
  GridField final_field;
  GridField previous_field;

  bool all_checks_pass() const;
  const SuiteVerdict* check(const std::string& name) const;
};

/// Observer invoked after every accepted step (field after boundary projection).
using StepObserver = std::function<void(long step, const GridField& field, const StepReport& report)>;

class FlowProblem {
 public:
  FlowProblem(ConvexDomain source, ConvexDomain target, EigenProfile profile, double spacing,
              BoundaryStencilKind stencil = BoundaryStencilKind::kQuadraticFit);

  const Discretization& source() const { return source_; }
  const ConvexDomain& target() const { return target_; }
  const EigenProfile& profile() const { return profile_; }
  const GridDiscretization& grid() const { return source_.grid(); }

  GridField sample(const std::function<double(const Vec2&)>& fn) const { return sample_field(grid(), fn); }

  /// Full diagnostics snapshot; theta may be NaN before burn-in completes.
  DiagnosticsRecord record(const GridField& field, const GridField* previous, const ThetaBounds* theta,
                           long step) const;

 private:
  Discretization source_;
  ConvexDomain target_;
  EigenProfile profile_;
};

/// Alternates interior_step and enforce_boundary from `initial` until the
/// stationarity residual max|F(D^2u) - mean F| drops below tolerance with an
/// agreeing C_infty cross-check, the time budget runs out, or an invariant
/// monitor trips.
FlowResult run_flow(const FlowProblem& problem, const GridField& initial, const RunOptions& options,
                    const StepObserver& observer = {});

}  // namespace sbvflow
