#include <cmath>

#include <gtest/gtest.h>

#include "sbvflow/errors.hpp"
#include "sbvflow/geometry.hpp"

using namespace sbvflow;

namespace {

ConvexDomain strip() {
  return ConvexDomain(
      "strip", [](const Vec2& p) { return 1.0 - p.x() * p.x(); }, [](const Vec2& p) { return Vec2(-2.0 * p.x(), 0.0); },
      [](const Vec2&) { return Mat2(Vec2(-2.0, 0.0).asDiagonal()); }, Box{Vec2(-1, -1), Vec2(1, 1)}, 1.0);
}

}  // namespace

TEST(Ellipse, DefiningFunctionValues) {
  const ConvexDomain disk = make_ellipse(1, 1);
  EXPECT_DOUBLE_EQ(disk.h(Vec2(0, 0)), 1.0);
  EXPECT_DOUBLE_EQ(disk.h(Vec2(1, 0)), 0.0);
  const ConvexDomain e = make_ellipse(2, 1);
  EXPECT_TRUE(e.gradient(Vec2(2, 0)).isApprox(Vec2(-1, 0)));
  EXPECT_DOUBLE_EQ(e.theta(), 0.5);
  EXPECT_DOUBLE_EQ(disk.theta(), 2.0);
  EXPECT_TRUE(e.bounding_box().lo.isApprox(Vec2(-2, -1)));
  EXPECT_TRUE(e.bounding_box().hi.isApprox(Vec2(2, 1)));
}

TEST(Ellipse, RejectsNonPositiveAxes) {
  EXPECT_THROW(make_ellipse(0, 1), InvalidDomainError);
  EXPECT_THROW(make_ellipse(1, -2), InvalidDomainError);
}

TEST(Ellipse, RotatedAndShiftedMatchesDirectFormula) {
  const EllipseParams p{1.5, 0.5, Vec2(0.2, -0.1), 0.7};
  const ConvexDomain e = make_ellipse(p);
  const double c = std::cos(p.angle);
  const double s = std::sin(p.angle);
  for (double x : {-1.0, -0.3, 0.4, 1.1}) {
    for (double y : {-0.6, 0.0, 0.35}) {
      const Vec2 d = Vec2(x, y) - p.center;
      const double u = c * d.x() + s * d.y();
      const double v = -s * d.x() + c * d.y();
      EXPECT_NEAR(e.h(Vec2(x, y)), 1.0 - u * u / 2.25 - v * v / 0.25, 1e-14);
    }
  }
  EXPECT_NEAR(concavity_modulus(e), e.theta(), 1e-12);
}

TEST(InnerNormal, Examples) {
  const ConvexDomain disk = make_ellipse(1, 1);
  EXPECT_TRUE(inner_normal(disk, Vec2(1, 0), 1e-12).isApprox(Vec2(-1, 0)));
  EXPECT_TRUE(inner_normal(disk, Vec2(0, -1), 1e-12).isApprox(Vec2(0, 1)));
  EXPECT_TRUE(inner_normal(make_ellipse(2, 1), Vec2(2, 0), 1e-12).isApprox(Vec2(-1, 0)));
}

TEST(InnerNormal, UnitLengthOnBoundary) {
  const ConvexDomain e = make_ellipse({1.3, 0.8, Vec2(0.1, 0.0), 0.4});
  for (int k = 0; k < 64; ++k) {
    const double a = 2.0 * M_PI * k / 64;
    const Vec2 p = project_to_boundary(e, Vec2(0.1, 0.0) + 0.5 * Vec2(std::cos(a), std::sin(a)));
    const Vec2 n = inner_normal(e, p, 1e-10);
    EXPECT_NEAR(n.norm(), 1.0, 1e-12);
    EXPECT_GT(e.h(p + 1e-3 * n), 0.0);
  }
}

TEST(ClassifyGrid, CoarseSpacingHasNoInterior) {
  EXPECT_THROW(classify_grid(make_ellipse(1, 1), 2.0), ResolutionError);
}

TEST(ClassifyGrid, MatchesBruteForce) {
  for (const auto& [domain, h] : {std::pair{make_ellipse(1, 1), 0.5}, std::pair{make_ellipse(2, 1), 0.25},
                                  std::pair{make_ellipse({1.2, 0.7, Vec2(0.1, 0.2), 0.5}), 0.1}}) {
    const GridDiscretization g = classify_grid(domain, h);
    int interior = 0;
    for (int j = 0; j < g.ny(); ++j) {
      for (int i = 0; i < g.nx(); ++i) {
        auto in = [&](int di, int dj) { return domain.h(g.coord(i + di, j + dj)) > 0.0; };
        NodeKind expect = NodeKind::kExterior;
        if (in(0, 0)) {
          const bool axes = in(1, 0) && in(-1, 0) && in(0, 1) && in(0, -1);
          const bool diag = (in(1, 1) && in(-1, -1)) || (in(-1, 1) && in(1, -1));
          expect = axes && diag ? NodeKind::kInterior : NodeKind::kBoundary;
        }
        EXPECT_EQ(g.kind(i, j), expect) << i << "," << j;
        if (expect == NodeKind::kInterior) {
          ++interior;
          EXPECT_GT(domain.h(g.coord(i, j)), 0.0);
        }
      }
    }
    EXPECT_EQ(static_cast<int>(g.interior_nodes().size()), interior);
  }
}

TEST(ClassifyGrid, UnitDiskHalfSpacing) {
  const GridDiscretization g = classify_grid(make_ellipse(1, 1), 0.5);
  EXPECT_EQ(g.interior_nodes().size(), 1u);
  EXPECT_EQ(g.boundary_nodes().size(), 8u);
}

TEST(ClassifyGrid, PaddedBeyondDomain) {
  const GridDiscretization g = classify_grid(make_ellipse(1, 1), 1.0 / 16);
  for (int j = 0; j < g.ny(); ++j) {
    EXPECT_EQ(g.kind(0, j), NodeKind::kExterior);
    EXPECT_EQ(g.kind(g.nx() - 1, j), NodeKind::kExterior);
  }
}

TEST(ConcavityModulus, Examples) {
  EXPECT_NEAR(concavity_modulus(make_ellipse(1, 1)), 2.0, 1e-12);
  EXPECT_NEAR(concavity_modulus(make_ellipse(2, 1)), 0.5, 1e-12);
  EXPECT_THROW(concavity_modulus(strip()), ConcavityViolationError);
}

TEST(ConcavityModulus, MonotoneInSampleCount) {
  const ConvexDomain blend =
      make_blend({{0.5, make_ellipse({1.2, 0.9, Vec2::Zero(), 0.5})}, {0.5, make_ellipse({1.1, 1.0, Vec2(0.1, 0), 0})}});
  double previous = concavity_modulus(blend, 1);
  for (int n : {10, 100, 1000, 10000}) {
    const double m = concavity_modulus(blend, n);
    EXPECT_LE(m, previous);
    previous = m;
  }
  EXPECT_GE(previous, blend.theta() - 1e-12);
}

TEST(Blend, IsQuadricWithCombinedModulus) {
  const ConvexDomain a = make_ellipse(1, 1);
  const ConvexDomain b = make_ellipse({2, 0.5, Vec2(0.3, 0), 0.2});
  const ConvexDomain blend = make_blend({{0.3, a}, {0.7, b}});
  ASSERT_TRUE(blend.quadric().has_value());
  for (const Vec2& p : {Vec2(0, 0), Vec2(0.4, -0.2), Vec2(-0.7, 0.1)}) {
    EXPECT_NEAR(blend.h(p), 0.3 * a.h(p) + 0.7 * b.h(p), 1e-14);
    const Quadric& q = *blend.quadric();
    const Vec2 d = p - q.center;
    EXPECT_NEAR(blend.h(p), q.level - d.dot(q.form * d), 1e-13);
  }
  EXPECT_NEAR(blend.theta(), 0.3 * a.theta() + 0.7 * b.theta(), 1e-14);
  EXPECT_GE(concavity_modulus(blend), blend.theta() - 1e-12);
}
