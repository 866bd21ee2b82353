#include "sbvflow/stencil.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "sbvflow/errors.hpp"

namespace sbvflow {

namespace {

struct FitSolve {
  std::vector<int> support;
  Eigen::MatrixXd coeffs;  // 5 x m over scaled offsets
};

std::optional<FitSolve> try_fit(const GridDiscretization& grid, int node, int radius) {
  const int ci = grid.col(node);
  const int cj = grid.row(node);
  FitSolve out;
  std::vector<Vec2> offsets;
  for (int dj = -radius; dj <= radius; ++dj) {
    for (int di = -radius; di <= radius; ++di) {
      if (di == 0 && dj == 0) continue;
      if (grid.kind(ci + di, cj + dj) != NodeKind::kInterior) continue;
      out.support.push_back(grid.index(ci + di, cj + dj));
      offsets.emplace_back(di, dj);
    }
  }
  const int m = static_cast<int>(out.support.size());
  if (m < 7) return std::nullopt;

  Eigen::MatrixXd a(m, 5);
  Eigen::VectorXd w(m);
  for (int k = 0; k < m; ++k) {
    const Vec2& d = offsets[k];
    a.row(k) << d.x(), d.y(), 0.5 * d.x() * d.x(), d.x() * d.y(), 0.5 * d.y() * d.y();
    w(k) = 1.0 / d.squaredNorm();
  }
  const Eigen::MatrixXd wa = w.cwiseSqrt().asDiagonal() * a;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(wa, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) < 1e-3 * s(0)) return std::nullopt;
  // coeffs = (A^T W A)^{-1} A^T W = V S^{-1} U^T W^{1/2}
  out.coeffs = svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose() *
               w.cwiseSqrt().asDiagonal();
  return out;
}

}  // namespace

BoundaryFit fit_boundary_node(const GridDiscretization& grid, int node, BoundaryStencilKind kind,
                              const ConvexDomain* domain) {
  if (!grid.active(node)) throw StencilError("fit requested at an exterior node");
  std::optional<FitSolve> solve = try_fit(grid, node, 2);
  if (!solve) solve = try_fit(grid, node, 3);
  if (!solve) {
    const Vec2 x = grid.coord(node);
    throw StencilError(fmt::format("no well-posed one-sided stencil at ({}, {})", x.x(), x.y()));
  }
  const double h = grid.spacing();
  const int m = static_cast<int>(solve->support.size());

  BoundaryFit fit;
  fit.node = node;
  fit.position = grid.coord(node);
  fit.support = solve->support;
  fit.grad_node = solve->coeffs.topRows(2) / h;
  fit.hess = solve->coeffs.bottomRows(3) / (h * h);

  if (kind == BoundaryStencilKind::kTwoPoint) {
    // Per axis: average of the one-sided differences toward Interior neighbors.
    const int ci = grid.col(node);
    const int cj = grid.row(node);
    auto column_of = [&](int other) {
      return static_cast<int>(std::find(fit.support.begin(), fit.support.end(), other) - fit.support.begin());
    };
    for (int axis = 0; axis < 2; ++axis) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(m);
      int count = 0;
      for (int sign : {-1, 1}) {
        const int ni = ci + (axis == 0 ? sign : 0);
        const int nj = cj + (axis == 1 ? sign : 0);
        if (grid.kind(ni, nj) != NodeKind::kInterior) continue;
        row(column_of(grid.index(ni, nj))) += sign / h;
        ++count;
      }
      if (count > 0) fit.grad_node.row(axis) = row / count;
    }
  }

  if (domain != nullptr) {
    fit.point = project_to_boundary(*domain, fit.position);
    const Vec2 g = domain->gradient(fit.point);
    if (!(g.norm() > 1e-12)) throw DegenerateNormalError("degenerate boundary normal");
    fit.normal = g.normalized();
  } else {
    fit.point = fit.position;
    fit.normal = Vec2::Zero();
  }

  if (kind == BoundaryStencilKind::kQuadraticFit) {
    const Vec2 d = fit.point - fit.position;
    Eigen::Matrix<double, 2, 3> shift;
    shift << d.x(), d.y(), 0.0, 0.0, d.x(), d.y();
    fit.grad_point = fit.grad_node + shift * fit.hess;
  } else {
    fit.grad_point = fit.grad_node;
  }
  return fit;
}

Mat2 interior_hessian(const GridField& field, const GridDiscretization& grid, int node) {
  const int i = grid.col(node);
  const int j = grid.row(node);
  const double h2 = grid.spacing() * grid.spacing();
  auto u = [&](int di, int dj) { return field.values[grid.index(i + di, j + dj)]; };
  const double c = u(0, 0);
  const double uxx = (u(1, 0) - 2.0 * c + u(-1, 0)) / h2;
  const double uyy = (u(0, 1) - 2.0 * c + u(0, -1)) / h2;

  const bool ne_sw = grid.active(i + 1, j + 1) && grid.active(i - 1, j - 1);
  const bool nw_se = grid.active(i - 1, j + 1) && grid.active(i + 1, j - 1);
  double uxy;
  if (ne_sw && nw_se) {
    uxy = (u(1, 1) - u(-1, 1) - u(1, -1) + u(-1, -1)) / (4.0 * h2);
  } else if (ne_sw) {
    uxy = (u(1, 1) - u(1, 0) - u(0, 1) + 2.0 * c - u(-1, 0) - u(0, -1) + u(-1, -1)) / (2.0 * h2);
  } else if (nw_se) {
    uxy = -(u(-1, 1) - u(-1, 0) - u(0, 1) + 2.0 * c - u(1, 0) - u(0, -1) + u(1, -1)) / (2.0 * h2);
  } else {
    const Vec2 x = grid.coord(node);
    throw StencilError(fmt::format("no diagonal pair for the mixed difference at ({}, {})", x.x(), x.y()));
  }
  Mat2 out;
  out << uxx, uxy, uxy, uyy;
  return out;
}

Vec2 interior_gradient(const GridField& field, const GridDiscretization& grid, int node) {
  const int i = grid.col(node);
  const int j = grid.row(node);
  const double h = grid.spacing();
  auto u = [&](int di, int dj) { return field.values[grid.index(i + di, j + dj)]; };
  return Vec2((u(1, 0) - u(-1, 0)) / (2.0 * h), (u(0, 1) - u(0, -1)) / (2.0 * h));
}

namespace {

Eigen::VectorXd differences(const GridField& field, const BoundaryFit& fit) {
  const double base = field.values[fit.node];
  Eigen::VectorXd d(fit.support.size());
  for (std::size_t k = 0; k < fit.support.size(); ++k) d(k) = field.values[fit.support[k]] - base;
  return d;
}

Mat2 hessian_from(const Eigen::Vector3d& h) {
  Mat2 out;
  out << h(0), h(1), h(1), h(2);
  return out;
}

}  // namespace

Mat2 discrete_hessian(const GridField& field, const GridDiscretization& grid, int node) {
  switch (grid.kind(node)) {
    case NodeKind::kInterior:
      return interior_hessian(field, grid, node);
    case NodeKind::kBoundary: {
      const BoundaryFit fit = fit_boundary_node(grid, node);
      return hessian_from(fit.hess * differences(field, fit));
    }
    case NodeKind::kExterior:
      break;
  }
  throw StencilError("Hessian requested at an exterior node");
}

Vec2 discrete_gradient(const GridField& field, const GridDiscretization& grid, int node) {
  switch (grid.kind(node)) {
    case NodeKind::kInterior:
      return interior_gradient(field, grid, node);
    case NodeKind::kBoundary: {
      const BoundaryFit fit = fit_boundary_node(grid, node);
      return fit.grad_node * differences(field, fit);
    }
    case NodeKind::kExterior:
      break;
  }
  throw StencilError("gradient requested at an exterior node");
}

Discretization::Discretization(const ConvexDomain& domain, double spacing, BoundaryStencilKind kind)
    : domain_(domain), grid_(classify_grid(domain, spacing)), kind_(kind) {
  fit_index_.assign(grid_.size(), -1);
  fits_.reserve(grid_.boundary_nodes().size());
  for (int node : grid_.boundary_nodes()) {
    fit_index_[node] = static_cast<int>(fits_.size());
    fits_.push_back(fit_boundary_node(grid_, node, kind_, &domain_));
  }
}

const BoundaryFit* Discretization::fit_for(int node) const {
  const int k = fit_index_[node];
  return k < 0 ? nullptr : &fits_[k];
}

Mat2 Discretization::hessian(const GridField& field, int node) const {
  if (grid_.kind(node) == NodeKind::kInterior) return interior_hessian(field, grid_, node);
  const BoundaryFit* fit = fit_for(node);
  if (fit == nullptr) throw StencilError("Hessian requested at an exterior node");
  return boundary_hessian(field, *fit);
}

Vec2 Discretization::gradient(const GridField& field, int node) const {
  if (grid_.kind(node) == NodeKind::kInterior) return interior_gradient(field, grid_, node);
  const BoundaryFit* fit = fit_for(node);
  if (fit == nullptr) throw StencilError("gradient requested at an exterior node");
  return fit->grad_node * differences(field, *fit);
}

Vec2 Discretization::boundary_gradient(const GridField& field, const BoundaryFit& fit) const {
  return fit.grad_point * differences(field, fit);
}

Mat2 Discretization::boundary_hessian(const GridField& field, const BoundaryFit& fit) const {
  return hessian_from(fit.hess * differences(field, fit));
}

}  // namespace sbvflow
