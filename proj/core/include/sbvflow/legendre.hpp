#pragma once

#include "sbvflow/field.hpp"
#include "sbvflow/operators.hpp"
#include "sbvflow/stencil.hpp"

namespace sbvflow {

enum class LegendreMode {
  /// u*(y) = max over primal nodes x of x.y - u(x).
  kDiscreteMax,
  /// Discrete maximum followed by a local quadratic correction at the
  /// maximizing node, kept when the refined maximizer stays within one cell.
  /// Exact for quadratic fields.
  kQuadraticRefined,
};

/// Convex conjugate of `u` sampled at the active nodes of `target`.
/// Throws ConvexityError when some Interior Hessian of u is not positive definite.
GridField legendre(const Discretization& primal, const GridField& u, const GridDiscretization& target,
                   LegendreMode mode = LegendreMode::kDiscreteMax);

/// Bilinear interpolation of dual quantities at a point of the target lattice.
struct DualSample {
  double value;
  Mat2 hessian;
};

/// Interpolates u* and its discrete Hessian at y. Returns nullopt unless all
/// four surrounding nodes are active.
std::optional<DualSample> sample_dual(const Discretization& dual, const GridField& u_star, const Vec2& y);

struct DualityReport {
  double residual = 0.0;  // max |D^2u*(Du(x)) D^2u(x) - I| (spectral norm)
  int matched = 0;
  int skipped = 0;
  double coverage() const { return matched + skipped > 0 ? double(matched) / (matched + skipped) : 0.0; }
};

/// Compares dual Hessians at y = Du(x) with inverse primal Hessians over the
/// Interior nodes of the primal grid.
DualityReport duality_residual(const Discretization& primal, const GridField& u, const Discretization& dual,
                               const GridField& u_star);

struct DualFlowReport {
  /// max |(u*_next - u*_prev)/dt - F*(D^2u*)| at matched points.
  double residual = 0.0;
  /// max |F*(D^2u*(Du(x))) + F(D^2u(x))|.
  double identity_residual = 0.0;
  int matched = 0;
  int skipped = 0;
  double coverage() const { return matched + skipped > 0 ? double(matched) / (matched + skipped) : 0.0; }
};

/// Residual of the dual flow between two consecutive primal fields and their
/// conjugates. Matched points use the later field.
DualFlowReport dual_flow_residual(const Discretization& primal, const GridField& u_prev, const GridField& u_next,
                                  const Discretization& dual, const GridField& u_star_prev,
                                  const GridField& u_star_next, const EigenProfile& profile);

}  // namespace sbvflow
