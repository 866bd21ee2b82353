#include "sbvflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sbvflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void update_margin(CheckResult& result, double margin, long step) {
  if (margin > result.worst_margin || std::isnan(margin)) {
    result.worst_margin = margin;
  }
  if (!(margin <= result.slack) && result.pass) {
    result.pass = false;
    result.failing_step = step;
  }
}

}  // namespace

double interior_slack(double spacing) { return 1e-6 + 10.0 * spacing * spacing; }
double boundary_slack(double spacing) { return 1e-4 + 10.0 * spacing; }

FieldScan scan_field(const Discretization& disc, const GridField& field, const EigenProfile& profile,
                     const ThetaBounds* theta) {
  const GridDiscretization& grid = disc.grid();
  FieldScan scan;
  scan.eig_lowest = kInf;
  scan.eig_highest = -kInf;
  scan.lambda1_max = -kInf;
  scan.lambdan_min = kInf;
  scan.F_min = kInf;
  scan.F_max = -kInf;
  scan.band_sum_fp_min = kInf;
  scan.band_sum_fp_max = -kInf;
  scan.band_sum_fpl2_min = kInf;
  scan.band_sum_fpl2_max = -kInf;
  scan.band_excess = -kInf;

  std::vector<double> values;
  values.reserve(grid.interior_nodes().size());
  for (int node : grid.interior_nodes()) {
    const Spectral2 s = eigen_sym(interior_hessian(field, grid, node));
    const double l1 = s.values(0);
    const double l2 = s.values(1);
    scan.eig_lowest = std::min(scan.eig_lowest, l1);
    scan.eig_highest = std::max(scan.eig_highest, l2);
    scan.lambda1_max = std::max(scan.lambda1_max, l1);
    scan.lambdan_min = std::min(scan.lambdan_min, l2);
    if (!(l1 > 0.0)) {
      scan.convex = false;
      continue;
    }
    const double value = profile.f(l1) + profile.f(l2);
    values.push_back(value);
    scan.F_min = std::min(scan.F_min, value);
    scan.F_max = std::max(scan.F_max, value);

    if (theta != nullptr) {
      const StructureBand band = structure_band(profile, s.values, *theta);
      scan.band_provenance = band.provenance;
      scan.band_sum_fp_min = std::min(scan.band_sum_fp_min, band.sum_fp);
      scan.band_sum_fp_max = std::max(scan.band_sum_fp_max, band.sum_fp);
      scan.band_sum_fpl2_min = std::min(scan.band_sum_fpl2_min, band.sum_fp_lambda2);
      scan.band_sum_fpl2_max = std::max(scan.band_sum_fpl2_max, band.sum_fp_lambda2);
      scan.band_excess = std::max(
          {scan.band_excess, band.fp_band.excess(band.sum_fp), band.fp_lambda2_band.excess(band.sum_fp_lambda2)});
    }
  }
  if (!values.empty()) {
    double sum = 0.0;
    for (double v : values) sum += v;
    scan.F_mean = sum / static_cast<double>(values.size());
    double residual = 0.0;
    for (double v : values) residual = std::max(residual, std::abs(v - scan.F_mean));
    scan.stat_residual = residual;
  }
  return scan;
}

CheckResult udot_bounds(std::span<const DiagnosticsRecord> records, double slack) {
  CheckResult result;
  result.slack = slack;
  for (const auto& r : records) {
    update_margin(result, std::max(r.theta0 - r.udot_min, r.udot_max - r.theta1), r.step);
  }
  return result;
}

CheckResult eigen_cone(std::span<const DiagnosticsRecord> records, const EigenProfile& profile, int n,
                       double udot_slack) {
  CheckResult result;
  result.slack = 0.0;
  for (const auto& r : records) {
    // Eigenvalue image of the time-derivative slack.
    double mu1_relaxed = kInf;
    double mu2_relaxed = 0.0;
    if ((r.theta1 + udot_slack) / n < profile.range_hi() && (r.theta0 - udot_slack) / n > profile.range_lo()) {
      const EnvelopeBounds relaxed =
          envelope_bounds(profile, {r.theta0 - udot_slack, r.theta1 + udot_slack}, n);
      mu1_relaxed = relaxed.mu1;
      mu2_relaxed = relaxed.mu2;
    }
    // Margins normalized so that <= 0 means inside the relaxed cone.
    const double m1 = r.lam_min - mu1_relaxed;
    const double m2 = mu2_relaxed - r.lam_max;
    update_margin(result, std::max(m1, m2), r.step);
  }
  return result;
}

CheckResult structure_bands(std::span<const DiagnosticsRecord> records, double tol) {
  CheckResult result;
  result.slack = tol;
  for (const auto& r : records) {
    if (r.band_provenance != BandProvenance::kProven) continue;
    update_margin(result, r.band_excess, r.step);
  }
  return result;
}

ObliquenessReport obliqueness(const Discretization& source, const ConvexDomain& target, const GridField& field) {
  ObliquenessReport report;
  report.min_inner = kInf;
  report.identity_residual = 0.0;
  for (const BoundaryFit& fit : source.boundary_fits()) {
    const Vec2 du = source.boundary_gradient(field, fit);
    const Vec2 beta = target.gradient(du);
    const double inner = beta.dot(fit.normal);
    report.min_inner = std::min(report.min_inner, inner);

    const Mat2 hess = source.boundary_hessian(field, fit);
    const double det = hess.determinant();
    if (!(det > 0.0) || !(hess.trace() > 0.0)) {
      ++report.singular_nodes;
      continue;
    }
    const double inv_nn = fit.normal.dot(hess.inverse() * fit.normal);
    const double rhs = std::sqrt(std::max(0.0, inv_nn * beta.dot(hess * beta)));
    report.identity_residual = std::max(report.identity_residual, std::abs(inner - rhs));
  }
  return report;
}

double tangential_identity(const Discretization& source, const ConvexDomain& target, const GridField& field) {
  double worst = 0.0;
  for (const BoundaryFit& fit : source.boundary_fits()) {
    const Vec2 du = source.boundary_gradient(field, fit);
    const Vec2 beta = target.gradient(du);
    const Vec2 tangent(-fit.normal.y(), fit.normal.x());
    worst = std::max(worst, std::abs(beta.dot(source.boundary_hessian(field, fit) * tangent)));
  }
  return worst;
}

std::vector<Vec2> sample_boundary(const ConvexDomain& domain, int count) {
  const Box& box = domain.bounding_box();
  // Deepest point of a coarse lattice serves as the ray origin.
  Vec2 origin = 0.5 * (box.lo + box.hi);
  double best = domain.h(origin);
  constexpr int kCoarse = 64;
  for (int j = 0; j <= kCoarse; ++j) {
    for (int i = 0; i <= kCoarse; ++i) {
      const Vec2 p = box.lo + Vec2((box.hi.x() - box.lo.x()) * i / kCoarse, (box.hi.y() - box.lo.y()) * j / kCoarse);
      const double v = domain.h(p);
      if (v > best) {
        best = v;
        origin = p;
      }
    }
  }
  const double reach = 2.0 * (box.hi - box.lo).norm();
  std::vector<Vec2> points;
  points.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / count;
    const Vec2 dir(std::cos(angle), std::sin(angle));
    double lo = 0.0;
    double hi = reach;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (domain.h(origin + mid * dir) > 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    points.push_back(origin + 0.5 * (lo + hi) * dir);
  }
  return points;
}

double image_distance(const Discretization& source, const ConvexDomain& target, const GridField& field,
                      int boundary_samples) {
  std::vector<Vec2> images;
  images.reserve(source.boundary_fits().size());
  double worst = 0.0;
  for (const BoundaryFit& fit : source.boundary_fits()) {
    const Vec2 du = source.boundary_gradient(field, fit);
    images.push_back(du);
    const double gn = target.gradient(du).norm();
    worst = std::max(worst, gn > 0.0 ? std::abs(target.h(du)) / gn : kInf);
  }
  if (images.empty()) return kInf;
  // Close the images into a polygon ordered by angle around their centroid.
  Vec2 centroid = Vec2::Zero();
  for (const Vec2& y : images) centroid += y;
  centroid /= static_cast<double>(images.size());
  std::sort(images.begin(), images.end(), [&](const Vec2& a, const Vec2& b) {
    return std::atan2(a.y() - centroid.y(), a.x() - centroid.x()) <
           std::atan2(b.y() - centroid.y(), b.x() - centroid.x());
  });
  for (const Vec2& q : sample_boundary(target, boundary_samples)) {
    double nearest = kInf;
    for (std::size_t k = 0; k < images.size(); ++k) {
      const Vec2& a = images[k];
      const Vec2& b = images[(k + 1) % images.size()];
      const Vec2 ab = b - a;
      const double len2 = ab.squaredNorm();
      const double s = len2 > 0.0 ? std::clamp((q - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
      nearest = std::min(nearest, (a + s * ab - q).norm());
    }
    worst = std::max(worst, nearest);
  }
  return worst;
}

}  // namespace sbvflow
