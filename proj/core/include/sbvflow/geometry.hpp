#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sbvflow {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct Box {
  Vec2 lo;
  Vec2 hi;

  bool contains(const Vec2& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
  }
};

/// Quadratic defining function h(p) = level - (p - center)^T M (p - center), M SPD.
struct Quadric {
  Mat2 form;
  Vec2 center;
  double level = 1.0;

  /// Shape matrix P of the ellipse {(p - center)^T P (p - center) < 1}.
  Mat2 shape() const { return form / level; }
};

struct EllipseParams {
  double a = 1.0;
  double b = 1.0;
  Vec2 center = Vec2::Zero();
  double angle = 0.0;  // rotation of the a-axis, radians
};

/// A uniformly convex planar domain {h > 0} given by a strictly concave
/// defining function together with its gradient and Hessian.
///
/// Instances are immutable after construction and may be shared freely.
/// The defining function is not normalized on the boundary, so any constant
/// that depends on |Dh| depends on the particular choice of h.
class ConvexDomain {
 public:
  using ScalarFn = std::function<double(const Vec2&)>;
  using VectorFn = std::function<Vec2(const Vec2&)>;
  using MatrixFn = std::function<Mat2(const Vec2&)>;

  ConvexDomain(std::string name, ScalarFn h, VectorFn dh, MatrixFn d2h, Box box, double theta,
               std::optional<Quadric> quadric = std::nullopt);

  double h(const Vec2& p) const { return h_(p); }
  Vec2 gradient(const Vec2& p) const { return dh_(p); }
  Mat2 hessian(const Vec2& p) const { return d2h_(p); }

  const Box& bounding_box() const { return box_; }
  /// Declared concavity modulus: D^2h xi.xi <= -theta |xi|^2 on the closure.
  double theta() const { return theta_; }
  const std::string& name() const { return name_; }
  /// Present when h is a quadratic polynomial (ellipses and their blends).
  const std::optional<Quadric>& quadric() const { return quadric_; }

  bool contains(const Vec2& p) const { return h_(p) > 0.0; }

 private:
  std::string name_;
  ScalarFn h_;
  VectorFn dh_;
  MatrixFn d2h_;
  Box box_;
  double theta_;
  std::optional<Quadric> quadric_;
};

/// h(p) = 1 - (p1/a)^2 - (p2/b)^2 with theta = 2 min(1/a^2, 1/b^2).
ConvexDomain make_ellipse(double a, double b);
ConvexDomain make_ellipse(const EllipseParams& params);

struct BlendTerm {
  double weight;
  ConvexDomain domain;
};

/// Positive combination sum_i w_i h_i; concavity is preserved with
/// theta = sum_i w_i theta_i.
ConvexDomain make_blend(const std::vector<BlendTerm>& terms);

/// Unit inner normal Dh(p)/|Dh(p)| at a point with |h(p)| <= tolerance.
Vec2 inner_normal(const ConvexDomain& domain, const Vec2& p, double tolerance);

/// Closest-boundary-point estimate: walks from p along -Dh(p) until h = 0.
Vec2 project_to_boundary(const ConvexDomain& domain, const Vec2& p);

/// Minimum over `sample_count` quasi-uniform points of the closure of
/// -(largest eigenvalue of D^2h). Samples are nested in `sample_count`.
double concavity_modulus(const ConvexDomain& domain, int sample_count = 10000);

enum class NodeKind : std::uint8_t { kExterior = 0, kBoundary = 1, kInterior = 2 };

/// Cartesian lattice {(i h, j h)} over a padded bounding box, each node
/// classified against a domain.
///
/// Interior nodes have all four axis neighbors inside the domain plus at
/// least one opposite pair of diagonal neighbors inside, so that a full
/// second-difference stencil exists. Remaining nodes inside the domain are
/// Boundary nodes.
class GridDiscretization {
 public:
  GridDiscretization(double spacing, int i0, int j0, int nx, int ny, std::vector<NodeKind> kinds);

  double spacing() const { return spacing_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int size() const { return nx_ * ny_; }

  int index(int i, int j) const { return j * nx_ + i; }
  int col(int node) const { return node % nx_; }
  int row(int node) const { return node / nx_; }
  bool in_range(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }

  NodeKind kind(int node) const { return kinds_[node]; }
  NodeKind kind(int i, int j) const { return in_range(i, j) ? kinds_[index(i, j)] : NodeKind::kExterior; }
  bool active(int i, int j) const { return kind(i, j) != NodeKind::kExterior; }
  bool active(int node) const { return kinds_[node] != NodeKind::kExterior; }

  Vec2 coord(int node) const { return coord(col(node), row(node)); }
  Vec2 coord(int i, int j) const { return Vec2((i0_ + i) * spacing_, (j0_ + j) * spacing_); }

  /// Node index nearest to p (may be out of range).
  std::pair<int, int> lattice_index(const Vec2& p) const;

  const std::vector<int>& interior_nodes() const { return interior_; }
  const std::vector<int>& boundary_nodes() const { return boundary_; }
  /// Interior and Boundary nodes in row-major order.
  const std::vector<int>& active_nodes() const { return active_; }

 private:
  double spacing_;
  int i0_;
  int j0_;
  int nx_;
  int ny_;
  std::vector<NodeKind> kinds_;
  std::vector<int> interior_;
  std::vector<int> boundary_;
  std::vector<int> active_;
};

GridDiscretization classify_grid(const ConvexDomain& domain, double spacing);

}  // namespace sbvflow
