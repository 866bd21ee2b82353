#include <cmath>

#include <gtest/gtest.h>

#include "sbvflow/errors.hpp"
#include "sbvflow/legendre.hpp"
#include "sbvflow/solver.hpp"

using namespace sbvflow;

namespace {

constexpr double kH = 1.0 / 32;

double max_error(const GridDiscretization& g, const GridField& f, const std::function<double(const Vec2&)>& exact,
                 const std::vector<int>& nodes) {
  double worst = 0.0;
  for (int node : nodes) worst = std::max(worst, std::abs(f[node] - exact(g.coord(node))));
  (void)g;
  return worst;
}

}  // namespace

TEST(Legendre, SelfDualQuadratic) {
  const Discretization primal(make_ellipse(1, 1), kH);
  const GridDiscretization target = classify_grid(make_ellipse(1, 1), kH);
  const GridField u = sample_field(primal.grid(), [](const Vec2& x) { return 0.5 * x.squaredNorm(); });
  auto exact = [](const Vec2& y) { return 0.5 * y.squaredNorm(); };
  const GridField coarse = legendre(primal, u, target);
  EXPECT_LE(max_error(target, coarse, exact, target.active_nodes()), kH * kH);
  const GridField refined = legendre(primal, u, target, LegendreMode::kQuadraticRefined);
  EXPECT_LE(max_error(target, refined, exact, target.active_nodes()), 1e-12);
}

TEST(Legendre, DiagonalQuadratic) {
  const double m1 = 2.0;
  const double m2 = 0.5;
  const Discretization primal(make_ellipse(1, 1), kH);
  const GridDiscretization target = classify_grid(make_ellipse(m1, m2), kH);
  const GridField u =
      sample_field(primal.grid(), [&](const Vec2& x) { return 0.5 * (m1 * x.x() * x.x() + m2 * x.y() * x.y()); });
  auto exact = [&](const Vec2& y) { return y.x() * y.x() / (2 * m1) + y.y() * y.y() / (2 * m2); };
  EXPECT_LE(max_error(target, legendre(primal, u, target), exact, target.active_nodes()), 2 * kH * kH);
  EXPECT_LE(max_error(target, legendre(primal, u, target, LegendreMode::kQuadraticRefined), exact,
                      target.active_nodes()),
            1e-12);
}

TEST(Legendre, ConstantShiftFlipsSign) {
  const Discretization primal(make_ellipse(1, 1), kH);
  const GridDiscretization target = classify_grid(make_ellipse(1.5, 1.5), kH);
  auto base = [](const Vec2& x) { return 0.75 * x.squaredNorm() + 0.1 * std::pow(x.x(), 4); };
  const GridField u = sample_field(primal.grid(), base);
  const GridField v = sample_field(primal.grid(), [&](const Vec2& x) { return base(x) + 0.3; });
  for (LegendreMode mode : {LegendreMode::kDiscreteMax, LegendreMode::kQuadraticRefined}) {
    const GridField a = legendre(primal, u, target, mode);
    const GridField b = legendre(primal, v, target, mode);
    for (int node : target.active_nodes()) EXPECT_NEAR(b[node], a[node] - 0.3, 1e-12);
  }
}

TEST(Legendre, RejectsNonConvexInput) {
  const Discretization primal(make_ellipse(1, 1), kH);
  const GridDiscretization target = classify_grid(make_ellipse(1, 1), kH);
  const GridField u = sample_field(primal.grid(), [](const Vec2& x) { return x.x() * x.x() - x.y() * x.y(); });
  EXPECT_THROW(legendre(primal, u, target), ConvexityError);
}

TEST(Legendre, OrderReversal) {
  const Discretization primal(make_ellipse(1, 1), kH);
  const GridDiscretization target = classify_grid(make_ellipse(1.2, 1.2), kH);
  const GridField u = sample_field(primal.grid(), [](const Vec2& x) { return 0.6 * x.squaredNorm(); });
  const GridField v = sample_field(primal.grid(), [](const Vec2& x) {
    return 0.6 * x.squaredNorm() + 0.05 * std::exp(-4 * (x - Vec2(0.2, -0.1)).squaredNorm());
  });
  const GridField lu = legendre(primal, u, target);
  const GridField lv = legendre(primal, v, target);
  for (int node : target.active_nodes()) EXPECT_GE(lu[node], lv[node]);
}

TEST(Legendre, ConjugateIsConvex) {
  const Discretization primal(make_ellipse(1, 1), kH);
  auto u_fn = [](const Vec2& x) { return 0.5 * x.squaredNorm() + 0.1 * std::pow(x.x(), 4) + 0.05 * x.x() * x.y(); };
  const GridField u = sample_field(primal.grid(), u_fn);
  // Stay inside Du(Omega) so every target node has an interior maximizer.
  const GridDiscretization target = classify_grid(make_ellipse(0.8, 0.8), kH);
  for (LegendreMode mode : {LegendreMode::kDiscreteMax, LegendreMode::kQuadraticRefined}) {
    const GridField us = legendre(primal, u, target, mode);
    for (int node : target.interior_nodes()) {
      const Mat2 hs = interior_hessian(us, target, node);
      EXPECT_GE(hs(0, 0), 0.0);
      EXPECT_GE(hs(1, 1), 0.0);
      if (mode == LegendreMode::kQuadraticRefined) EXPECT_GT(eigen_sym(hs).values(0), 0.0);
    }
  }
}

TEST(Legendre, DoubleConjugationRecoversField) {
  const double s = 1.4;
  const Discretization primal(make_ellipse(1, 1), kH);
  const Discretization dual(make_ellipse(s, s), kH);
  const GridField u = sample_field(primal.grid(), [&](const Vec2& x) { return 0.5 * s * x.squaredNorm() + 0.2; });
  const GridField us = legendre(primal, u, dual.grid());
  const GridField uss = legendre(dual, us, primal.grid());
  double worst = 0.0;
  for (int node : primal.grid().interior_nodes()) worst = std::max(worst, std::abs(uss[node] - u[node]));
  EXPECT_LE(worst, 2 * kH * kH);
}

TEST(DualityResidual, Quadratics) {
  const Discretization primal(make_ellipse(1, 1), kH);
  {
    const Discretization dual(make_ellipse(1, 1), kH);
    const GridField u = sample_field(primal.grid(), [](const Vec2& x) { return 0.5 * x.squaredNorm(); });
    const DualityReport r =
        duality_residual(primal, u, dual, legendre(primal, u, dual.grid(), LegendreMode::kQuadraticRefined));
    EXPECT_LE(r.residual, kH * kH);
    EXPECT_GT(r.coverage(), 0.95);
  }
  {
    const Discretization dual(make_ellipse(2, 0.5), kH);
    const GridField u =
        sample_field(primal.grid(), [](const Vec2& x) { return 0.5 * (2 * x.x() * x.x() + 0.5 * x.y() * x.y()); });
    const DualityReport r =
        duality_residual(primal, u, dual, legendre(primal, u, dual.grid(), LegendreMode::kQuadraticRefined));
    EXPECT_LE(r.residual, kH * kH);
    EXPECT_GT(r.coverage(), 0.95);
  }
}

TEST(DualityResidual, MismatchedPairStaysAway) {
  const Discretization primal(make_ellipse(1, 1), kH);
  const Discretization dual(make_ellipse(2, 2), kH);
  const GridField u = sample_field(primal.grid(), [](const Vec2& x) { return 0.5 * x.squaredNorm(); });
  const GridField w = sample_field(primal.grid(), [](const Vec2& x) { return x.squaredNorm(); });
  const DualityReport r =
      duality_residual(primal, u, dual, legendre(primal, w, dual.grid(), LegendreMode::kQuadraticRefined));
  EXPECT_NEAR(r.residual, 0.5, 1e-9);
}

TEST(DualFlowResidual, TranslatingQuadratic) {
  const double s = 2.0;
  const FlowProblem p(make_ellipse(1, 1), make_ellipse(s, s), EigenProfile::preset(TauPreset::kTau0), kH);
  const Discretization dual(p.target(), kH);
  const GridField u0 = p.sample([&](const Vec2& x) { return 0.5 * s * x.squaredNorm(); });
  GridField u1 = interior_step(u0, p.grid(), p.profile(), stable_dt(u0, p.profile(), p.grid()));
  enforce_boundary(u1, p.source(), p.target());
  const GridField s0 = legendre(p.source(), u0, dual.grid(), LegendreMode::kQuadraticRefined);
  const GridField s1 = legendre(p.source(), u1, dual.grid(), LegendreMode::kQuadraticRefined);
  const DualFlowReport r = dual_flow_residual(p.source(), u0, u1, dual, s0, s1, p.profile());
  EXPECT_LE(r.residual, 1e-8);
  EXPECT_LE(r.identity_residual, 1e-10);
  EXPECT_GT(r.coverage(), 0.99);
}

TEST(DualFlowResidual, StationaryMongeAmpere) {
  const FlowProblem p(make_ellipse(1, 1), make_ellipse(1, 1), EigenProfile::preset(TauPreset::kTau0), kH);
  const Discretization dual(p.target(), kH);
  const GridField u0 = p.sample([](const Vec2& x) { return 0.5 * x.squaredNorm(); });
  GridField u1 = interior_step(u0, p.grid(), p.profile(), 1e-3);
  const GridField s0 = legendre(p.source(), u0, dual.grid());
  const GridField s1 = legendre(p.source(), u1, dual.grid());
  const DualFlowReport r = dual_flow_residual(p.source(), u0, u1, dual, s0, s1, p.profile());
  EXPECT_LE(r.residual, kH * kH);
  EXPECT_LE(r.identity_residual, 1e-10);
}

TEST(DualFlowResidual, RequiresIncreasingTime) {
  const FlowProblem p(make_ellipse(1, 1), make_ellipse(1, 1), EigenProfile::preset(TauPreset::kTau0), kH);
  const Discretization dual(p.target(), kH);
  const GridField u0 = p.sample([](const Vec2& x) { return 0.5 * x.squaredNorm(); });
  const GridField s0 = legendre(p.source(), u0, dual.grid());
  EXPECT_THROW(dual_flow_residual(p.source(), u0, u0, dual, s0, s0, p.profile()), InputError);
}
