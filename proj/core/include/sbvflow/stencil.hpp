#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sbvflow/field.hpp"
#include "sbvflow/geometry.hpp"

namespace sbvflow {

enum class BoundaryStencilKind {
  /// Weighted least-squares quadratic through the node and nearby Interior
  /// nodes; gradient extrapolated to the projected boundary point. Exact on
  /// quadratic fields.
  kQuadraticFit,
  /// One-sided two-point differences toward Interior neighbors, evaluated at
  /// the node itself.
  kTwoPoint,
};

/// Linear stencils attached to one Boundary node. Every map acts on the
/// differences (u_k - u_node) over `support`, which holds Interior nodes
/// only; Boundary nodes are therefore decoupled from each other.
struct BoundaryFit {
  int node = -1;
  Vec2 position;
  /// Projection of the node onto the continuous boundary and the inner normal there.
  Vec2 point;
  Vec2 normal;
  std::vector<int> support;
  Eigen::Matrix<double, 2, Eigen::Dynamic> grad_node;
  Eigen::Matrix<double, 3, Eigen::Dynamic> hess;  // rows: H11, H12, H22
  Eigen::Matrix<double, 2, Eigen::Dynamic> grad_point;

  /// The gradient at `point` is affine in the node value: base + value * slope.
  Vec2 slope() const { return -grad_point.rowwise().sum(); }
};

/// Least-squares quadratic fit at an active node using Interior nodes within
/// Chebyshev radius 2 (widened to 3 when the fit is ill-conditioned).
/// Throws StencilError when no well-posed fit exists.
BoundaryFit fit_boundary_node(const GridDiscretization& grid, int node,
                              BoundaryStencilKind kind = BoundaryStencilKind::kQuadraticFit,
                              const ConvexDomain* domain = nullptr);

/// 9-point second differences at Interior nodes (7-point mixed term when only
/// one diagonal pair is inside); quadratic fit at Boundary nodes. Exact on
/// quadratic fields.
Mat2 discrete_hessian(const GridField& field, const GridDiscretization& grid, int node);

/// Central differences at Interior nodes; fitted gradient at Boundary nodes.
Vec2 discrete_gradient(const GridField& field, const GridDiscretization& grid, int node);

/// Grid plus precomputed boundary stencils for one domain.
class Discretization {
 public:
  Discretization(const ConvexDomain& domain, double spacing,
                 BoundaryStencilKind kind = BoundaryStencilKind::kQuadraticFit);

  const GridDiscretization& grid() const { return grid_; }
  const ConvexDomain& domain() const { return domain_; }
  BoundaryStencilKind stencil_kind() const { return kind_; }
  const std::vector<BoundaryFit>& boundary_fits() const { return fits_; }
  /// Fit for a Boundary node, nullptr otherwise.
  const BoundaryFit* fit_for(int node) const;

  Mat2 hessian(const GridField& field, int node) const;
  Vec2 gradient(const GridField& field, int node) const;

  /// Gradient extrapolated to the projected boundary point of a fit.
  Vec2 boundary_gradient(const GridField& field, const BoundaryFit& fit) const;
  Mat2 boundary_hessian(const GridField& field, const BoundaryFit& fit) const;

 private:
  ConvexDomain domain_;
  GridDiscretization grid_;
  BoundaryStencilKind kind_;
  std::vector<BoundaryFit> fits_;
  std::vector<int> fit_index_;
};

/// Interior 9-point Hessian; precondition: node is Interior.
Mat2 interior_hessian(const GridField& field, const GridDiscretization& grid, int node);
Vec2 interior_gradient(const GridField& field, const GridDiscretization& grid, int node);

}  // namespace sbvflow
