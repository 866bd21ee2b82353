#include <benchmark/benchmark.h>

#include "sbvflow/legendre.hpp"
#include "sbvflow/solver.hpp"

using namespace sbvflow;

namespace {

TauPreset tau_of(int index) {
  constexpr TauPreset kAll[] = {TauPreset::kTau0, TauPreset::kTauPi4, TauPreset::kTauPi2};
  return kAll[index];
}

void BM_EvaluateF(benchmark::State& state) {
  const EigenProfile profile = EigenProfile::preset(tau_of(static_cast<int>(state.range(0))));
  Mat2 a;
  a << 2.0, 0.3, 0.3, 0.7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_F(profile, a));
    a(0, 1) = a(1, 0) = a(0, 1) + 1e-12;
  }
}
BENCHMARK(BM_EvaluateF)->DenseRange(0, 2);

void BM_InteriorStep(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  const FlowProblem p(make_ellipse(1, 0.75), make_ellipse(1.2, 0.9), EigenProfile::preset(TauPreset::kTauPi2), h);
  const GridField u = p.sample([](const Vec2& x) { return 0.6 * x.x() * x.x() + 0.8 * x.y() * x.y(); });
  const double dt = stable_dt(u, p.profile(), p.grid());
  for (auto _ : state) benchmark::DoNotOptimize(interior_step(u, p.grid(), p.profile(), dt));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(p.grid().interior_nodes().size()));
}
BENCHMARK(BM_InteriorStep)->Arg(32)->Arg(64);

void BM_EnforceBoundary(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  const FlowProblem p(make_ellipse(1, 1), make_ellipse(2, 2), EigenProfile::preset(TauPreset::kTau0), h);
  const GridField u0 = p.sample([](const Vec2& x) { return 0.9 * x.squaredNorm(); });
  for (auto _ : state) {
    GridField u = u0;
    benchmark::DoNotOptimize(enforce_boundary(u, p.source(), p.target()));
  }
}
BENCHMARK(BM_EnforceBoundary)->Arg(32)->Arg(64);

void BM_Legendre(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  const auto mode = state.range(1) ? LegendreMode::kQuadraticRefined : LegendreMode::kDiscreteMax;
  const Discretization primal(make_ellipse(1, 1), h);
  const GridDiscretization target = classify_grid(make_ellipse(2, 2), h);
  const GridField u = sample_field(primal.grid(), [](const Vec2& x) { return x.squaredNorm(); });
  for (auto _ : state) benchmark::DoNotOptimize(legendre(primal, u, target, mode));
}
BENCHMARK(BM_Legendre)->Args({16, 0})->Args({16, 1})->Args({32, 0})->Args({32, 1})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
