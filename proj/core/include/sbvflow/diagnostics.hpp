#pragma once

#include <limits>
#include <span>
#include <string>

#include "sbvflow/field.hpp"
#include "sbvflow/operators.hpp"
#include "sbvflow/stencil.hpp"

namespace sbvflow {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Snapshot of every monitored quantity at one recorded step.
struct DiagnosticsRecord {
  double t = 0.0;
  long step = 0;
  double theta0 = kNaN;
  double theta1 = kNaN;
  double udot_min = kNaN;
  double udot_max = kNaN;
  /// Cone quantities: max over nodes of the smallest eigenvalue and min over
  /// nodes of the largest eigenvalue (compared against mu1 and mu2).
  double lam_min = kNaN;
  double lam_max = kNaN;
  /// Global eigenvalue extremes (convexity and two-sided Hessian monitors).
  double eig_lowest = kNaN;
  double eig_highest = kNaN;
  double mu1 = kNaN;
  double mu2 = kNaN;
  double obliq_min = kNaN;
  double obliq_identity = kNaN;
  double tangential = kNaN;
  double band_sum_fp = kNaN;     // min over nodes
  double band_sum_fpl2 = kNaN;   // min over nodes
  double band_sum_fp_max = kNaN;
  double band_sum_fpl2_max = kNaN;
  double band_excess = kNaN;     // worst signed excess over both bands
  BandProvenance band_provenance = BandProvenance::kDerived;
  double stat_residual = kNaN;
  double hausdorff = kNaN;
  double duality_residual = kNaN;
  double mean_u = kNaN;
  double mean_F = kNaN;
};

struct CheckResult {
  bool pass = true;
  double worst_margin = -std::numeric_limits<double>::infinity();
  double slack = 0.0;
  long failing_step = -1;
};

/// Default slack for interior quantities: 1e-6 + 10 h^2.
double interior_slack(double spacing);
/// Default slack for boundary quantities: 1e-4 + 10 h.
double boundary_slack(double spacing);

/// Statistics of F(D^2 u) and of the Hessian spectrum over Interior nodes.
struct FieldScan {
  double eig_lowest = kNaN;
  double eig_highest = kNaN;
  double lambda1_max = kNaN;
  double lambdan_min = kNaN;
  double F_min = kNaN;
  double F_max = kNaN;
  double F_mean = kNaN;
  double stat_residual = kNaN;
  double band_sum_fp_min = kNaN;
  double band_sum_fp_max = kNaN;
  double band_sum_fpl2_min = kNaN;
  double band_sum_fpl2_max = kNaN;
  double band_excess = kNaN;
  BandProvenance band_provenance = BandProvenance::kDerived;
  bool convex = true;
};

/// Scans Interior nodes. Structure bands are evaluated when `theta` is given.
FieldScan scan_field(const Discretization& disc, const GridField& field, const EigenProfile& profile,
                     const ThetaBounds* theta = nullptr);

/// Time-derivative band: Theta_0 - slack <= udot <= Theta_1 + slack.
/// worst_margin = max over records of max(Theta_0 - udot_min, udot_max - Theta_1).
CheckResult udot_bounds(std::span<const DiagnosticsRecord> records, double slack);

/// Eigenvalue cone: lam_min <= mu1 + s and lam_max >= mu2 - s at every record,
/// where s is the eigenvalue image of the time-derivative slack.
CheckResult eigen_cone(std::span<const DiagnosticsRecord> records, const EigenProfile& profile, int n,
                       double udot_slack);

/// Proven structure bands (kTauPi4 only): every record within 1e-9.
CheckResult structure_bands(std::span<const DiagnosticsRecord> records, double tol = 1e-9);

struct ObliquenessReport {
  double min_inner = kNaN;          // min <beta, nu> over Boundary nodes
  double identity_residual = kNaN;  // max |<beta,nu> - sqrt(u^{ij} nu_i nu_j beta^T D^2u beta)|
  int singular_nodes = 0;
};

/// beta = Dh~(Du) at the projected boundary point of every Boundary node.
ObliquenessReport obliqueness(const Discretization& source, const ConvexDomain& target, const GridField& field);

/// max over Boundary nodes of |beta^T D^2u tau| with tau the unit tangent.
double tangential_identity(const Discretization& source, const ConvexDomain& target, const GridField& field);

/// Hausdorff-type distance between the discrete gradient image of the
/// boundary and the boundary of the target domain: max of |h(Du)|/|Dh(Du)|
/// over Boundary nodes and of the distance from sampled target boundary points
/// to the closed polygon through the images.
double image_distance(const Discretization& source, const ConvexDomain& target, const GridField& field,
                      int boundary_samples = 256);

/// Points on the boundary of a domain, equally spaced in angle around its
/// deepest lattice point.
std::vector<Vec2> sample_boundary(const ConvexDomain& domain, int count);

}  // namespace sbvflow
