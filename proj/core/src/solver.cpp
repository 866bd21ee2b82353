#include "sbvflow/solver.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "sbvflow/errors.hpp"

namespace sbvflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// phi(v) = h~(base + v slope): concave in v. The admissible root is the one
/// on the decreasing branch, where Du leaves the target domain as the node
/// value grows.
class BoundaryEquation {
 public:
  BoundaryEquation(const ConvexDomain& target, Vec2 base, Vec2 slope)
      : target_(target), base_(base), slope_(slope) {}

  double value(double v) const { return target_.h(base_ + v * slope_); }
  double derivative(double v) const { return target_.gradient(base_ + v * slope_).dot(slope_); }
  double slope_norm() const { return slope_.norm(); }

 private:
  const ConvexDomain& target_;
  Vec2 base_;
  Vec2 slope_;
};

struct RootResult {
  double v;
  double residual;
  int iterations;
  bool ok;
};

RootResult bracket_root(const BoundaryEquation& eq, double v0, double scale, const BoundaryOptions& options) {
  int iterations = 0;
  // Right end: phi < 0 on the decreasing branch.
  double step = scale;
  double hi = v0;
  while (!(eq.value(hi) < 0.0 && eq.derivative(hi) < 0.0)) {
    hi = v0 + step;
    step *= 2.0;
    if (++iterations > 200) return {v0, eq.value(v0), iterations, false};
  }
  // Left end: somewhere phi' > 0, so the maximum of phi lies in between.
  double lo = hi - scale;
  step = scale;
  while (!(eq.derivative(lo) > 0.0)) {
    step *= 2.0;
    lo = hi - step;
    if (++iterations > 400) return {v0, eq.value(v0), iterations, false};
  }
  // Maximize the concave phi on [lo, hi] by bisection on phi'.
  double a = lo;
  double b = hi;
  for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it, ++iterations) {
    const double mid = 0.5 * (a + b);
    if (eq.derivative(mid) > 0.0) {
      a = mid;
    } else {
      b = mid;
    }
  }
  const double vmax = 0.5 * (a + b);
  if (!(eq.value(vmax) > 0.0)) return {vmax, eq.value(vmax), iterations, false};

  a = vmax;
  b = hi;
  double mid = 0.5 * (a + b);
  double fm = eq.value(mid);
  for (int it = 0; it < 300; ++it, ++iterations) {
    mid = 0.5 * (a + b);
    fm = eq.value(mid);
    if (std::abs(fm) <= options.tolerance) break;
    if (fm > 0.0) {
      a = mid;
    } else {
      b = mid;
    }
    if (b - a <= 1e-16 * (1.0 + std::abs(mid))) break;
  }
  return {mid, fm, iterations, std::abs(fm) <= options.tolerance};
}

RootResult solve_boundary_node(const BoundaryEquation& eq, double v0, double scale, const BoundaryOptions& options) {
  double v = v0;
  double phi = eq.value(v);
  if (std::abs(phi) <= options.tolerance) return {v, phi, 0, true};

  int iterations = 0;
  for (; iterations < options.max_iterations; ++iterations) {
    const double dphi = eq.derivative(v);
    if (!(dphi < -options.derivative_threshold)) break;
    const double next = v - phi / dphi;
    const double next_phi = eq.value(next);
    // After the first step the iterates approach the root from the right
    // with decreasing |phi|; anything else means we left the admissible branch.
    if (iterations > 0 && !(std::abs(next_phi) < std::abs(phi))) break;
    v = next;
    phi = next_phi;
    if (std::abs(phi) <= options.tolerance && eq.derivative(v) < 0.0) return {v, phi, iterations + 1, true};
  }
  RootResult fallback = bracket_root(eq, v0, scale, options);
  fallback.iterations += iterations;
  return fallback;
}

}  // namespace

std::string_view to_string(Termination termination) {
  switch (termination) {
    case Termination::kConverged:
      return "converged";
    case Termination::kMaxTime:
      return "max-time";
    case Termination::kInvariantViolation:
      return "invariant-violation";
  }
  return "unknown";
}

GridField interior_step(const GridField& field, const GridDiscretization& grid, const EigenProfile& profile,
                        double dt, double min_eigenvalue) {
  GridField next = field;
  for (int node : grid.interior_nodes()) {
    const Spectral2 s = eigen_sym(interior_hessian(field, grid, node));
    if (!(s.values(0) > min_eigenvalue)) {
      const Vec2 x = grid.coord(node);
      throw ConvexityLossError(fmt::format("discrete Hessian eigenvalue {} at ({}, {}) is not above {}",
                                           s.values(0), x.x(), x.y(), min_eigenvalue),
                               x.x(), x.y(), s.values(0));
    }
    next.values[node] = field.values[node] + dt * (profile.f(s.values(0)) + profile.f(s.values(1)));
  }
  next.time = field.time + dt;
  return next;
}

StepReport enforce_boundary(GridField& field, const Discretization& source, const ConvexDomain& target,
                            const BoundaryOptions& options) {
  StepReport report;
  const Box& tbox = target.bounding_box();
  const double diameter = (tbox.hi - tbox.lo).norm();
  for (const BoundaryFit& fit : source.boundary_fits()) {
    const double current = field.values[fit.node];
    Eigen::VectorXd values(fit.support.size());
    for (std::size_t k = 0; k < fit.support.size(); ++k) values(k) = field.values[fit.support[k]];
    const Vec2 slope = fit.slope();
    const Vec2 base = fit.grad_point * values;
    const BoundaryEquation eq(target, base, slope);
    const double scale = 0.25 * diameter / std::max(eq.slope_norm(), 1e-300);

    const RootResult root = solve_boundary_node(eq, current, scale, options);
    if (!root.ok) {
      throw BoundaryProjectionError(fmt::format("boundary projection failed at ({}, {}): |h(Du)| = {}",
                                                fit.position.x(), fit.position.y(), std::abs(root.residual)));
    }
    field.values[fit.node] = root.v;
    report.newton_iterations += root.iterations;
    report.boundary_residual = std::max(report.boundary_residual, std::abs(root.residual));
    report.max_update = std::max(report.max_update, std::abs(root.v - current));
  }
  return report;
}

double stable_dt(const GridField& field, const EigenProfile& profile, const GridDiscretization& grid, double sigma) {
  double max_trace = 0.0;
  for (int node : grid.interior_nodes()) {
    const Spectral2 s = eigen_sym(interior_hessian(field, grid, node));
    if (!(s.values(0) > 0.0)) continue;
    max_trace = std::max(max_trace, profile.fp(s.values(0)) + profile.fp(s.values(1)));
  }
  const double h = grid.spacing();
  if (!(max_trace > 0.0)) return sigma * h * h;
  return sigma * h * h / (2.0 * max_trace);
}

CInftyEstimate estimate_c_infty(std::span<const MeanSample> window, double late_mean_F) {
  if (window.size() < 2) throw InsufficientDataError("C_infty estimate needs at least two samples");
  double t_mean = 0.0;
  double u_mean = 0.0;
  for (const auto& s : window) {
    t_mean += s.t;
    u_mean += s.mean_u;
  }
  t_mean /= static_cast<double>(window.size());
  u_mean /= static_cast<double>(window.size());
  double num = 0.0;
  double den = 0.0;
  for (const auto& s : window) {
    num += (s.t - t_mean) * (s.mean_u - u_mean);
    den += (s.t - t_mean) * (s.t - t_mean);
  }
  if (!(den > 0.0)) throw InsufficientDataError("C_infty window has no time extent");
  const double slope = num / den;
  return {slope, slope - late_mean_F};
}

bool FlowResult::all_checks_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const SuiteVerdict& v) { return v.pass || !v.gating; });
}

const SuiteVerdict* FlowResult::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

FlowProblem::FlowProblem(ConvexDomain source, ConvexDomain target, EigenProfile profile, double spacing,
                         BoundaryStencilKind stencil)
    : source_(source, spacing, stencil), target_(std::move(target)), profile_(std::move(profile)) {}

DiagnosticsRecord FlowProblem::record(const GridField& field, const GridField* previous, const ThetaBounds* theta,
                                      long step) const {
  const GridDiscretization& g = grid();
  DiagnosticsRecord rec;
  rec.t = field.time;
  rec.step = step;

  const FieldScan scan = scan_field(source_, field, profile_, theta);
  rec.lam_min = scan.lambda1_max;
  rec.lam_max = scan.lambdan_min;
  rec.eig_lowest = scan.eig_lowest;
  rec.eig_highest = scan.eig_highest;
  rec.stat_residual = scan.stat_residual;
  rec.mean_F = scan.F_mean;

  if (theta != nullptr) {
    rec.theta0 = theta->lo;
    rec.theta1 = theta->hi;
    try {
      const EnvelopeBounds mu = envelope_bounds(profile_, *theta, 2);
      rec.mu1 = mu.mu1;
      rec.mu2 = mu.mu2;
    } catch (const InfeasibleBoundError&) {
    }
    rec.band_sum_fp = scan.band_sum_fp_min;
    rec.band_sum_fpl2 = scan.band_sum_fpl2_min;
    rec.band_sum_fp_max = scan.band_sum_fp_max;
    rec.band_sum_fpl2_max = scan.band_sum_fpl2_max;
    rec.band_excess = scan.band_excess;
    rec.band_provenance = scan.band_provenance;
  }

  double sum_u = 0.0;
  for (int node : g.active_nodes()) sum_u += field.values[node];
  rec.mean_u = sum_u / static_cast<double>(g.active_nodes().size());

  if (previous != nullptr && field.time > previous->time) {
    const double dt = field.time - previous->time;
    double lo = kInf;
    double hi = -kInf;
    for (int node : g.active_nodes()) {
      const double udot = (field.values[node] - previous->values[node]) / dt;
      lo = std::min(lo, udot);
      hi = std::max(hi, udot);
    }
    rec.udot_min = lo;
    rec.udot_max = hi;
  }

  const ObliquenessReport obl = obliqueness(source_, target_, field);
  rec.obliq_min = obl.min_inner;
  rec.obliq_identity = obl.identity_residual;
  rec.tangential = tangential_identity(source_, target_, field);
  rec.hausdorff = image_distance(source_, target_, field);
  return rec;
}

namespace {

std::vector<SuiteVerdict> evaluate_checks(const FlowProblem& problem, std::span<const DiagnosticsRecord> records,
                                          const FlowSummary& summary, const RunOptions& options, double s_int) {
  const double h = options.spacing;
  std::vector<SuiteVerdict> checks;

  const CheckResult udot = udot_bounds(records, s_int);
  checks.push_back({"udot_band", udot.pass, true, udot.worst_margin, s_int, "margin beyond [Theta0, Theta1]"});

  const CheckResult cone = eigen_cone(records, problem.profile(), 2, s_int);
  checks.push_back({"eigen_cone", cone.pass, true, cone.worst_margin, 0.0, "margin beyond relaxed [mu1, mu2] cone"});

  const bool proven_band = problem.profile().is_preset(TauPreset::kTauPi4);
  if (proven_band) {
    const CheckResult band = structure_bands(records, 1e-9);
    checks.push_back({"structure_band", band.pass, true, band.worst_margin, 1e-9, "proven"});
  } else {
    double worst = -kInf;
    for (const auto& r : records) worst = std::max(worst, r.band_excess);
    checks.push_back({"structure_band", worst <= 1e-9, false, worst, 1e-9, "derived"});
  }

  double lowest = kInf;
  double obliq = kInf;
  double identity = 0.0;
  double tangential = 0.0;
  for (const auto& r : records) {
    lowest = std::min(lowest, r.eig_lowest);
    obliq = std::min(obliq, r.obliq_min);
    identity = std::max(identity, r.obliq_identity);
    tangential = std::max(tangential, r.tangential);
  }
  if (records.empty()) lowest = obliq = kNaN;
  checks.push_back({"convexity", records.empty() || lowest >= options.convexity_floor, true, lowest,
                    options.convexity_floor, "min discrete Hessian eigenvalue"});
  checks.push_back({"obliqueness", records.empty() || obliq > 0.0, true, obliq, 0.0, "min <beta, nu>"});
  checks.push_back({"obliqueness_identity", identity <= 10.0 * h, false, identity, 10.0 * h,
                    "max |<beta,nu> - sqrt(u^ij nu_i nu_j h_pk h_pl u_kl)|"});
  checks.push_back({"tangential", tangential <= 10.0 * h, false, tangential, 10.0 * h, "max |u_beta_tau|"});

  const bool converged = summary.termination == Termination::kConverged;
  checks.push_back({"image_distance", !converged || summary.hausdorff <= 5.0 * h, converged, summary.hausdorff,
                    5.0 * h, "one-sided Hausdorff estimate of Du(boundary) vs target boundary"});
  checks.push_back({"stationarity", summary.stat_residual <= options.convergence_tolerance, converged,
                    summary.stat_residual, options.convergence_tolerance, "max |F(D^2u) - mean F|"});
  return checks;
}

}  // namespace

FlowResult run_flow(const FlowProblem& problem, const GridField& initial, const RunOptions& options,
                    const StepObserver& observer) {
  const GridDiscretization& grid = problem.grid();
  const double h = grid.spacing();
  const double s_int = options.interior_slack >= 0.0 ? options.interior_slack : interior_slack(h);

  FlowResult result;
  FlowSummary& summary = result.summary;
  GridField u = initial;
  GridField previous = initial;

  auto violation = [&](const std::string& message) {
    summary.termination = Termination::kInvariantViolation;
    summary.message = message;
  };

  std::optional<ThetaBounds> theta;
  std::vector<MeanSample> samples;
  bool finished = false;
  long step = 0;
  try {
    if (!is_finite_on(u, grid)) throw InputError("initial field has non-finite values");
    enforce_boundary(u, problem.source(), problem.target(), options.boundary);
    previous = u;
    if (options.burn_in_steps <= 0) {
      const FieldScan scan = scan_field(problem.source(), u, problem.profile());
      if (!scan.convex) throw ConvexityError("initial field is not strictly convex");
      theta = ThetaBounds{scan.F_min, scan.F_max};
    }

    while (!finished) {
      if (u.time >= options.t_max * (1.0 - 1e-12) || step >= options.max_steps) {
        summary.termination = Termination::kMaxTime;
        summary.message = fmt::format("time budget exhausted at t = {}", u.time);
        break;
      }
      const double dt = std::min(stable_dt(u, problem.profile(), grid, options.sigma), options.t_max - u.time);
      GridField next = interior_step(u, grid, problem.profile(), dt, options.convexity_floor);
      const StepReport report = enforce_boundary(next, problem.source(), problem.target(), options.boundary);
      previous = std::move(u);
      u = std::move(next);
      ++step;
      if (observer) observer(step, u, report);

      if (step == options.burn_in_steps) {
        const FieldScan scan = scan_field(problem.source(), u, problem.profile());
        theta = ThetaBounds{scan.F_min, scan.F_max};
        continue;
      }
      if (!theta || (step - std::max(options.burn_in_steps, 0)) % options.record_interval != 0) continue;

      DiagnosticsRecord rec = problem.record(u, &previous, &*theta, step);
      result.trajectory.push_back(rec);
      samples.push_back({rec.t, rec.mean_u});

      const std::span<const DiagnosticsRecord> last(&result.trajectory.back(), 1);
      const std::vector<SuiteVerdict> now = evaluate_checks(problem, last, summary, options, s_int);
      for (const auto& c : now) {
        if (!c.pass && c.gating && options.stop_on_violation) {
          violation(fmt::format("invariant '{}' violated at step {} (value {}, threshold {})", c.name, step,
                                c.value, c.threshold));
          finished = true;
          break;
        }
      }
      if (finished) break;

      if (rec.stat_residual <= options.convergence_tolerance && samples.size() >= 2) {
        const std::size_t w = std::min<std::size_t>(samples.size(), std::max(2, options.c_infty_window));
        const CInftyEstimate est =
            estimate_c_infty(std::span<const MeanSample>(samples).subspan(samples.size() - w), rec.mean_F);
        if (std::abs(est.discrepancy) <= 10.0 * options.convergence_tolerance) {
          summary.termination = Termination::kConverged;
          summary.message = fmt::format("stationary at t = {}", u.time);
          finished = true;
        }
      }
    }
  } catch (const ConvexityLossError& e) {
    violation(e.what());
  } catch (const BoundaryProjectionError& e) {
    violation(e.what());
  } catch (const StencilError& e) {
    violation(e.what());
  } catch (const ConvexityError& e) {
    violation(e.what());
  } catch (const OutsideConeError& e) {
    violation(e.what());
  }

  summary.steps = step;
  summary.final_time = u.time;
  if (!result.trajectory.empty()) {
    const DiagnosticsRecord& last = result.trajectory.back();
    summary.stat_residual = last.stat_residual;
    summary.c_infty_crosscheck = last.mean_F;
    if (samples.size() >= 2) {
      const std::size_t w = std::min<std::size_t>(samples.size(), std::max(2, options.c_infty_window));
      summary.c_infty =
          estimate_c_infty(std::span<const MeanSample>(samples).subspan(samples.size() - w), last.mean_F).slope;
    }
  } else {
    const FieldScan scan = scan_field(problem.source(), u, problem.profile());
    summary.stat_residual = scan.stat_residual;
    summary.c_infty_crosscheck = scan.F_mean;
  }
  summary.hausdorff = image_distance(problem.source(), problem.target(), u);

  result.checks = evaluate_checks(problem, result.trajectory, summary, options, s_int);
  result.final_field = std::move(u);
  result.previous_field = std::move(previous);
  return result;
}

}  // namespace sbvflow
