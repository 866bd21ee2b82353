#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "sbvflow/errors.hpp"
#include "sbvflow/solver.hpp"

using namespace sbvflow;

namespace {

constexpr double kH = 1.0 / 32;

FlowProblem disk_problem(double s, TauPreset tau, double h = kH) {
  return FlowProblem(make_ellipse(1, 1), make_ellipse(s, s), EigenProfile::preset(tau), h);
}

double max_boundary_residual(const FlowProblem& p, const GridField& u) {
  double worst = 0.0;
  for (const auto& fit : p.source().boundary_fits())
    worst = std::max(worst, std::abs(p.target().h(p.source().boundary_gradient(u, fit))));
  return worst;
}

}  // namespace

TEST(DiscreteHessian, ExactOnQuadratics) {
  const ConvexDomain disk = make_ellipse(1, 1);
  const GridDiscretization g = classify_grid(disk, 0.1);
  const GridField a = sample_field(g, [](const Vec2& x) { return x.x() * x.x() + 3 * x.y() * x.y(); });
  const GridField b = sample_field(g, [](const Vec2& x) { return x.x() * x.y(); });
  Mat2 ha;
  ha << 2, 0, 0, 6;
  Mat2 hb;
  hb << 0, 1, 1, 0;
  for (int node : g.active_nodes()) {
    EXPECT_LT((discrete_hessian(a, g, node) - ha).norm(), 1e-9) << node;
    EXPECT_LT((discrete_hessian(b, g, node) - hb).norm(), 1e-9) << node;
  }
  for (int node : g.interior_nodes()) EXPECT_LT((discrete_hessian(a, g, node) - ha).norm(), 1e-12);
}

TEST(DiscreteHessian, QuarticTruncationError) {
  for (double h : {0.1, 0.05}) {
    const GridDiscretization g = classify_grid(make_ellipse(1, 1), h);
    const GridField u = sample_field(g, [](const Vec2& x) { return std::pow(x.x(), 4); });
    const auto [i, j] = g.lattice_index(Vec2(0, 0));
    // (h^4 - 0 + h^4) / h^2 against the exact value 12 * 0^2.
    EXPECT_NEAR(discrete_hessian(u, g, g.index(i, j))(0, 0), 2 * h * h, 1e-14);
  }
}

TEST(DiscreteHessian, ExteriorNodeRejected) {
  const GridDiscretization g = classify_grid(make_ellipse(1, 1), 0.1);
  const GridField u = sample_field(g, [](const Vec2& x) { return x.squaredNorm(); });
  EXPECT_THROW(discrete_hessian(u, g, 0), StencilError);
}

TEST(BoundaryFit, GradientAtProjectedPointExactOnQuadratics) {
  const ConvexDomain e = make_ellipse({1.2, 0.7, Vec2(0.1, 0), 0.3});
  const Discretization d(e, 1.0 / 24);
  Mat2 a;
  a << 1.4, 0.3, 0.3, 0.9;
  const Vec2 b(0.2, -0.1);
  const GridField u = sample_field(d.grid(), [&](const Vec2& x) { return 0.5 * x.dot(a * x) + b.dot(x) + 7; });
  ASSERT_FALSE(d.boundary_fits().empty());
  for (const auto& fit : d.boundary_fits()) {
    EXPECT_NEAR(e.h(fit.point), 0.0, 1e-12);
    EXPECT_LT((d.boundary_gradient(u, fit) - (a * fit.point + b)).norm(), 1e-9);
    EXPECT_LT((d.boundary_hessian(u, fit) - a).norm(), 1e-8);
    EXPECT_NEAR(fit.normal.norm(), 1.0, 1e-12);
  }
}

TEST(BoundaryFit, TwoPointIsExactOnLinearFields) {
  const Discretization d(make_ellipse(1, 1), 1.0 / 16, BoundaryStencilKind::kTwoPoint);
  const GridField u = sample_field(d.grid(), [](const Vec2& x) { return 2 * x.x() - 3 * x.y(); });
  for (const auto& fit : d.boundary_fits()) EXPECT_LT((d.boundary_gradient(u, fit) - Vec2(2, -3)).norm(), 1e-9);
}

TEST(InteriorStep, TranslatingQuadraticIsReproduced) {
  const FlowProblem p = disk_problem(2, TauPreset::kTau0);
  const GridField u = p.sample([](const Vec2& x) { return x.squaredNorm(); });
  const double dt = stable_dt(u, p.profile(), p.grid());
  const GridField next = interior_step(u, p.grid(), p.profile(), dt);
  const double c = 2 * std::log(2.0);
  for (int node : p.grid().interior_nodes()) EXPECT_NEAR(next[node] - u[node], dt * c, 1e-14);
  for (int node : p.grid().boundary_nodes()) EXPECT_EQ(next[node], u[node]);
  EXPECT_DOUBLE_EQ(next.time, dt);
}

TEST(InteriorStep, ZeroStepAndStationaryDatum) {
  const FlowProblem p = disk_problem(1, TauPreset::kTau0);
  const GridField u = p.sample([](const Vec2& x) { return 0.5 * x.squaredNorm(); });
  const GridField same = interior_step(u, p.grid(), p.profile(), 0.0);
  const GridField still = interior_step(u, p.grid(), p.profile(), 0.01);
  for (int node : p.grid().active_nodes()) {
    EXPECT_EQ(same[node], u[node]);
    EXPECT_NEAR(still[node], u[node], 1e-15);
  }
}

TEST(InteriorStep, ConvexityLossCarriesLocation) {
  const FlowProblem p = disk_problem(1, TauPreset::kTauPi2);
  const GridField u = p.sample([](const Vec2& x) { return x.x() * x.x() - 0.1 * x.y() * x.y(); });
  try {
    interior_step(u, p.grid(), p.profile(), 1e-4);
    FAIL() << "expected ConvexityLossError";
  } catch (const ConvexityLossError& e) {
    EXPECT_LT(e.eigenvalue(), 0.0);
    EXPECT_GT(make_ellipse(1, 1).h(Vec2(e.x1(), e.x2())), 0.0);
  }
}

TEST(EnforceBoundary, ExactSolutionNeedsNoIterations) {
  const double s = 1.7;
  const FlowProblem p = disk_problem(s, TauPreset::kTauPi2);
  GridField u = p.sample([&](const Vec2& x) { return 0.5 * s * x.squaredNorm(); });
  const StepReport r = enforce_boundary(u, p.source(), p.target());
  EXPECT_EQ(r.newton_iterations, 0);
  EXPECT_LE(r.boundary_residual, 1e-10);
}

TEST(EnforceBoundary, RestoresPerturbedNode) {
  const FlowProblem p = disk_problem(2, TauPreset::kTau0);
  const GridField exact = p.sample([](const Vec2& x) { return x.squaredNorm(); });
  GridField u = exact;
  const int node = p.grid().boundary_nodes()[p.grid().boundary_nodes().size() / 3];
  u[node] += 0.05;
  EXPECT_GT(max_boundary_residual(p, u), 1e-3);
  const StepReport r = enforce_boundary(u, p.source(), p.target());
  EXPECT_LE(r.boundary_residual, 1e-10);
  EXPECT_LE(max_boundary_residual(p, u), 1e-10);
  EXPECT_NEAR(u[node], exact[node], 1e-9);
  EXPECT_GT(r.newton_iterations, 0);
}

TEST(EnforceBoundary, GradientFarOutsideTargetIsReported) {
  // A single node value cannot pull Du = 8x back into the unit disk.
  const FlowProblem p = disk_problem(1, TauPreset::kTau0);
  GridField u = p.sample([](const Vec2& x) { return 4.0 * x.squaredNorm(); });
  EXPECT_THROW(enforce_boundary(u, p.source(), p.target()), BoundaryProjectionError);
}

TEST(EnforceBoundary, ModeratelyOutsideTarget) {
  const FlowProblem p = disk_problem(1, TauPreset::kTau0);
  GridField u = p.sample([](const Vec2& x) { return 0.55 * x.squaredNorm(); });
  const StepReport r = enforce_boundary(u, p.source(), p.target());
  EXPECT_LE(r.boundary_residual, 1e-10);
  EXPECT_LE(max_boundary_residual(p, u), 1e-10);
}

TEST(EnforceBoundary, ShrunkenGradient) {
  const FlowProblem p = disk_problem(2, TauPreset::kTau0);
  GridField u = p.sample([](const Vec2& x) { return 0.25 * x.squaredNorm(); });
  enforce_boundary(u, p.source(), p.target());
  EXPECT_LE(max_boundary_residual(p, u), 1e-10);
}

TEST(StableDt, Examples) {
  const FlowProblem p = disk_problem(1, TauPreset::kTauPi2, 0.1);
  const GridField u = p.sample([](const Vec2& x) { return 0.5 * x.squaredNorm(); });
  EXPECT_NEAR(stable_dt(u, p.profile(), p.grid()), 0.002, 1e-15);

  const FlowProblem fine = disk_problem(1, TauPreset::kTauPi2, 0.05);
  const GridField uf = fine.sample([](const Vec2& x) { return 0.5 * x.squaredNorm(); });
  EXPECT_NEAR(stable_dt(uf, fine.profile(), fine.grid()), 0.002 / 4, 1e-15);

  const EigenProfile pi2 = EigenProfile::preset(TauPreset::kTauPi2);
  const EigenProfile doubled = EigenProfile::custom(
      "2 arctan", [](double t) { return 2 * std::atan(t); }, [](double t) { return 2 / (1 + t * t); },
      [](double t) { return -4 * t / ((1 + t * t) * (1 + t * t)); }, [](double v) { return std::tan(v / 2); }, 0,
      std::numbers::pi);
  EXPECT_NEAR(stable_dt(u, doubled, p.grid()), 0.5 * stable_dt(u, pi2, p.grid()), 1e-15);
}

TEST(EstimateCInfty, Examples) {
  std::vector<MeanSample> samples;
  for (int k = 0; k < 6; ++k) samples.push_back({0.5 * k, 3 + 0.7 * 0.5 * k});
  const CInftyEstimate e = estimate_c_infty(samples, 0.7);
  EXPECT_NEAR(e.slope, 0.7, 1e-14);
  EXPECT_NEAR(e.discrepancy, 0.0, 1e-14);
  EXPECT_THROW(estimate_c_infty(std::span<const MeanSample>(samples).first(1), 0.7), InsufficientDataError);
}

struct ExactCase {
  double s;
  TauPreset tau;
  double c_infty;
};

class ExactDiskRun : public ::testing::TestWithParam<ExactCase> {};

TEST_P(ExactDiskRun, ConvergesToAnalyticConstant) {
  const ExactCase c = GetParam();
  const FlowProblem p = disk_problem(c.s, c.tau);
  RunOptions o;
  const FlowResult r = run_flow(p, p.sample([&](const Vec2& x) { return 0.5 * c.s * x.squaredNorm(); }), o);
  EXPECT_EQ(r.summary.termination, Termination::kConverged) << r.summary.message;
  EXPECT_NEAR(r.summary.c_infty, c.c_infty, 1e-3);
  EXPECT_NEAR(r.summary.c_infty, c.c_infty, 1e-9);
  EXPECT_LE(r.summary.stat_residual, 1e-3);
  EXPECT_TRUE(r.all_checks_pass());
}

INSTANTIATE_TEST_SUITE_P(
    Presets, ExactDiskRun,
    ::testing::Values(ExactCase{1, TauPreset::kTauPi2, std::numbers::pi / 2},
                      ExactCase{2, TauPreset::kTau0, 2 * std::numbers::ln2},
                      ExactCase{2, TauPreset::kTauPi2, 2 * std::atan(2.0)},
                      ExactCase{2, TauPreset::kTauPi4, -2.0 / 3.0}));

TEST(RunFlow, AlignedEllipseIsStationary) {
  const FlowProblem p(make_ellipse(1, 1), make_ellipse(1.3, 0.8), EigenProfile::preset(TauPreset::kTauPi4), kH);
  const GridField u0 = p.sample([](const Vec2& x) { return 0.5 * (1.3 * x.x() * x.x() + 0.8 * x.y() * x.y()); });
  const FlowResult r = run_flow(p, u0, RunOptions{});
  EXPECT_EQ(r.summary.termination, Termination::kConverged);
  EXPECT_LE(r.summary.stat_residual, 1e-3);
  EXPECT_NEAR(r.summary.c_infty, -(1 / 2.3 + 1 / 1.8), 1e-9);
}

TEST(RunFlow, QuadraticFixedPointMovesEveryNodeByDtC) {
  const FlowProblem p(make_ellipse(1, 1), make_ellipse(1.3, 0.8), EigenProfile::preset(TauPreset::kTauPi2), kH);
  const GridField u0 = p.sample([](const Vec2& x) { return 0.5 * (1.3 * x.x() * x.x() + 0.8 * x.y() * x.y()); });
  const double c = std::atan(1.3) + std::atan(0.8);
  GridField last = u0;
  int steps = 0;
  RunOptions o;
  o.t_max = 0.02;
  o.convergence_tolerance = 1e-300;
  run_flow(p, u0, o, [&](long, const GridField& u, const StepReport&) {
    const double dt = u.time - last.time;
    for (int node : p.grid().active_nodes()) ASSERT_NEAR(u[node] - last[node], dt * c, 1e-10);
    last = u;
    ++steps;
  });
  EXPECT_GT(steps, 10);
}

TEST(RunFlow, AdditiveConstantEquivariance) {
  const FlowProblem p(make_ellipse(1, 1), make_ellipse(1.3, 0.8), EigenProfile::preset(TauPreset::kTau0), kH);
  auto u0 = [](const Vec2& x) {
    const double h = 1 - x.squaredNorm();
    return 0.5 * (1.3 * x.x() * x.x() + 0.8 * x.y() * x.y()) + 0.05 * h * h * (1 + 0.3 * x.x());
  };
  RunOptions o;
  o.t_max = 0.05;
  std::vector<GridField> a;
  std::vector<GridField> b;
  const FlowResult ra = run_flow(p, p.sample(u0), o, [&](long, const GridField& u, const StepReport&) { a.push_back(u); });
  const FlowResult rb = run_flow(p, p.sample([&](const Vec2& x) { return u0(x) + 2.5; }), o,
                                 [&](long, const GridField& u, const StepReport&) { b.push_back(u); });
  ASSERT_EQ(a.size(), b.size());
  ASSERT_FALSE(a.empty());
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (int node : p.grid().active_nodes()) worst = std::max(worst, std::abs(b[k][node] - a[k][node] - 2.5));
  EXPECT_LE(worst, 1e-10);
  EXPECT_EQ(ra.summary.steps, rb.summary.steps);
}

TEST(RunFlow, PerturbedDataConverges) {
  const FlowProblem p(make_ellipse(1, 1), make_ellipse(1.3, 0.8), EigenProfile::preset(TauPreset::kTauPi2), kH);
  const GridField u0 = p.sample([](const Vec2& x) {
    const double h = 1 - x.squaredNorm();
    return 0.5 * (1.3 * x.x() * x.x() + 0.8 * x.y() * x.y()) + 0.05 * h * h * (1 + 0.5 * x.x() - 0.3 * x.y());
  });
  const FlowResult r = run_flow(p, u0, RunOptions{});
  EXPECT_EQ(r.summary.termination, Termination::kConverged);
  EXPECT_NEAR(r.summary.c_infty, std::atan(1.3) + std::atan(0.8), 1e-4);
  EXPECT_TRUE(r.all_checks_pass());
  // Monotone bound preservation over the whole trajectory.
  const SuiteVerdict* udot = r.check("udot_band");
  ASSERT_NE(udot, nullptr);
  EXPECT_TRUE(udot->pass);
  // Records are time ordered.
  for (std::size_t k = 1; k < r.trajectory.size(); ++k) EXPECT_GT(r.trajectory[k].t, r.trajectory[k - 1].t);
}

TEST(RunFlow, ConvexityFloorViolationTerminates) {
  const FlowProblem p = disk_problem(2, TauPreset::kTau0);
  RunOptions o;
  o.convexity_floor = 5.0;
  const FlowResult r = run_flow(p, p.sample([](const Vec2& x) { return x.squaredNorm(); }), o);
  EXPECT_EQ(r.summary.termination, Termination::kInvariantViolation);
  EXPECT_FALSE(r.summary.message.empty());
}

TEST(RunFlow, TimeBudgetExhausted) {
  const FlowProblem p(make_ellipse(1, 1), make_ellipse(1.3, 0.8), EigenProfile::preset(TauPreset::kTau0), kH);
  const GridField u0 = p.sample([](const Vec2& x) {
    const double h = 1 - x.squaredNorm();
    return 0.5 * (1.3 * x.x() * x.x() + 0.8 * x.y() * x.y()) + 0.05 * h * h;
  });
  RunOptions o;
  o.t_max = 0.01;
  const FlowResult r = run_flow(p, u0, o);
  EXPECT_EQ(r.summary.termination, Termination::kMaxTime);
  EXPECT_NEAR(r.summary.final_time, 0.01, 1e-12);
}
