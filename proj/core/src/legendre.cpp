#include "sbvflow/legendre.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "sbvflow/errors.hpp"

namespace sbvflow {

namespace {

struct PrimalNode {
  Vec2 x;
  double u;
  Vec2 g;
  Mat2 h_inv;
  bool refinable;
};

void require_convex(const Discretization& primal, const GridField& u) {
  const GridDiscretization& grid = primal.grid();
  for (int node : grid.interior_nodes()) {
    const Spectral2 s = eigen_sym(interior_hessian(u, grid, node));
    if (!(s.values(0) > 0.0)) {
      const Vec2 x = grid.coord(node);
      throw ConvexityError(
          fmt::format("field is not strictly convex at ({}, {}): eigenvalue {}", x.x(), x.y(), s.values(0)));
    }
  }
}

double spectral_norm(const Mat2& m) {
  return Eigen::JacobiSVD<Mat2>(m).singularValues()(0);
}

std::vector<Mat2> dual_hessians(const Discretization& dual, const GridField& u_star) {
  std::vector<Mat2> out(dual.grid().size(), Mat2::Constant(std::numeric_limits<double>::quiet_NaN()));
  for (int node : dual.grid().active_nodes()) out[node] = dual.hessian(u_star, node);
  return out;
}

struct Cell {
  int i;
  int j;
  double s;
  double t;
};

std::optional<Cell> locate(const GridDiscretization& grid, const Vec2& y) {
  const Vec2 rel = (y - grid.coord(0, 0)) / grid.spacing();
  const double fi = std::floor(rel.x());
  const double fj = std::floor(rel.y());
  if (!std::isfinite(fi) || !std::isfinite(fj)) return std::nullopt;
  const int i = static_cast<int>(fi);
  const int j = static_cast<int>(fj);
  if (!grid.active(i, j) || !grid.active(i + 1, j) || !grid.active(i, j + 1) || !grid.active(i + 1, j + 1))
    return std::nullopt;
  return Cell{i, j, rel.x() - fi, rel.y() - fj};
}

template <typename T, typename Get>
T bilinear(const GridDiscretization& grid, const Cell& c, Get get) {
  return (1 - c.s) * (1 - c.t) * get(grid.index(c.i, c.j)) + c.s * (1 - c.t) * get(grid.index(c.i + 1, c.j)) +
         (1 - c.s) * c.t * get(grid.index(c.i, c.j + 1)) + c.s * c.t * get(grid.index(c.i + 1, c.j + 1));
}

}  // namespace

GridField legendre(const Discretization& primal, const GridField& u, const GridDiscretization& target,
                   LegendreMode mode) {
  require_convex(primal, u);
  const GridDiscretization& grid = primal.grid();
  const double h = grid.spacing();

  std::vector<PrimalNode> nodes;
  nodes.reserve(grid.active_nodes().size());
  for (int node : grid.active_nodes()) {
    PrimalNode p{grid.coord(node), u.values[node], Vec2::Zero(), Mat2::Zero(), false};
    if (mode == LegendreMode::kQuadraticRefined) {
      const Mat2 hess = primal.hessian(u, node);
      if (hess.determinant() > 0.0 && hess.trace() > 0.0) {
        p.g = primal.gradient(u, node);
        p.h_inv = hess.inverse();
        p.refinable = true;
      }
    }
    nodes.push_back(p);
  }

  GridField out;
  out.values.assign(target.size(), std::numeric_limits<double>::quiet_NaN());
  out.time = u.time;
  for (int t : target.active_nodes()) {
    const Vec2 y = target.coord(t);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const double v = nodes[k].x.dot(y) - nodes[k].u;
      if (v > best) {
        best = v;
        arg = k;
      }
    }
    if (mode == LegendreMode::kQuadraticRefined && nodes[arg].refinable) {
      const PrimalNode& p = nodes[arg];
      const Vec2 dy = y - p.g;
      const Vec2 dx = p.h_inv * dy;
      if (dx.lpNorm<Eigen::Infinity>() <= h) best = std::max(best, p.x.dot(y) - p.u + 0.5 * dy.dot(dx));
    }
    out.values[t] = best;
  }
  return out;
}

std::optional<DualSample> sample_dual(const Discretization& dual, const GridField& u_star, const Vec2& y) {
  const GridDiscretization& grid = dual.grid();
  const std::optional<Cell> cell = locate(grid, y);
  if (!cell) return std::nullopt;
  DualSample out;
  out.value = bilinear<double>(grid, *cell, [&](int n) { return u_star.values[n]; });
  out.hessian = bilinear<Mat2>(grid, *cell, [&](int n) { return Mat2(dual.hessian(u_star, n)); });
  return out;
}

DualityReport duality_residual(const Discretization& primal, const GridField& u, const Discretization& dual,
                               const GridField& u_star) {
  const GridDiscretization& pg = primal.grid();
  const GridDiscretization& dg = dual.grid();
  const std::vector<Mat2> hstar = dual_hessians(dual, u_star);
  DualityReport report;
  for (int node : pg.interior_nodes()) {
    const Vec2 y = interior_gradient(u, pg, node);
    const std::optional<Cell> cell = locate(dg, y);
    if (!cell) {
      ++report.skipped;
      continue;
    }
    ++report.matched;
    const Mat2 hs = bilinear<Mat2>(dg, *cell, [&](int n) { return hstar[n]; });
    const Mat2 product = hs * interior_hessian(u, pg, node);
    report.residual = std::max(report.residual, spectral_norm(product - Mat2::Identity()));
  }
  return report;
}

DualFlowReport dual_flow_residual(const Discretization& primal, const GridField& u_prev, const GridField& u_next,
                                  const Discretization& dual, const GridField& u_star_prev,
                                  const GridField& u_star_next, const EigenProfile& profile) {
  const double dt = u_next.time - u_prev.time;
  if (!(dt > 0.0)) throw InputError("dual flow residual needs increasing time stamps");
  const GridDiscretization& pg = primal.grid();
  const GridDiscretization& dg = dual.grid();
  const std::vector<Mat2> hstar = dual_hessians(dual, u_star_next);
  const EigenProfile dual_prof = dual_profile(profile);
  DualFlowReport report;
  for (int node : pg.interior_nodes()) {
    const Vec2 y = interior_gradient(u_next, pg, node);
    const std::optional<Cell> cell = locate(dg, y);
    if (!cell) {
      ++report.skipped;
      continue;
    }
    const Mat2 hs = bilinear<Mat2>(dg, *cell, [&](int n) { return hstar[n]; });
    const Spectral2 sd = eigen_sym(Mat2(0.5 * (hs + hs.transpose())));
    if (!(sd.values(0) > 0.0)) {
      ++report.skipped;
      continue;
    }
    ++report.matched;
    const double rate = bilinear<double>(
        dg, *cell, [&](int n) { return (u_star_next.values[n] - u_star_prev.values[n]) / dt; });
    const double f_star = dual_prof.f(sd.values(0)) + dual_prof.f(sd.values(1));
    const double f = evaluate_F(profile, interior_hessian(u_next, pg, node));
    report.residual = std::max(report.residual, std::abs(rate - f_star));
    report.identity_residual = std::max(report.identity_residual, std::abs(f_star + f));
  }
  return report;
}

}  // namespace sbvflow
