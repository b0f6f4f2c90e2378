#include <benchmark/benchmark.h>

#include "ipest/ipest.hpp"

using namespace ipest;

namespace {

std::vector<std::size_t> one_to(std::size_t d) {
  std::vector<std::size_t> v(d);
  for (std::size_t k = 0; k < d; ++k) v[k] = k + 1;
  return v;
}

struct Headline {
  explicit Headline(std::size_t n)
      : grid(DesignGrid::uniform(n)),
        op(ForwardOperator::diagonal_power(grid, 256, 1.0)),
        ladder(SubspaceLadder::singular(op.linearization(), one_to(128))) {
    SourceSpec src;
    src.nu = 0.5;
    src.omega = critical_omega(op.linearization(), 12345, 1.0);
    x0 = make_source_solution(op.linearization(), src, Vector::Zero(256));
  }
  ObservationSet observe(std::uint64_t seed) const {
    return ObservationSet(grid, op.evaluate(x0) + sample_noise({NoiseKind::gaussian, 0.1, seed}, grid.size()), 0.1);
  }
  DesignGrid grid;
  ForwardOperator op;
  SubspaceLadder ladder;
  Vector x0;
};

void BM_LadderBuild(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DesignGrid grid = DesignGrid::uniform(n);
  const auto op = ForwardOperator::diagonal_power(grid, 256, 1.0);
  for (auto _ : state) {
    const auto ladder = SubspaceLadder::singular(op.linearization(), one_to(128));
    benchmark::DoNotOptimize(build_model_systems(op.linearization(), ladder));
  }
}
BENCHMARK(BM_LadderBuild)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_SelectOrdered(benchmark::State& state) {
  const Headline h(static_cast<std::size_t>(state.range(0)));
  const OrderedModel model(h.op, h.ladder);
  const ObservationSet obs = h.observe(1);
  for (auto _ : state) benchmark::DoNotOptimize(select_ordered(model, obs, {2.5, 0.5, 0.1}));
}
BENCHMARK(BM_SelectOrdered)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_TikhonovSweep(benchmark::State& state) {
  const Headline h(static_cast<std::size_t>(state.range(0)));
  const M0Choice m0 = choose_m0(h.grid.size(), 1.0, h.ladder);
  const TikhonovContext ctx = make_tikhonov_context(h.op, h.ladder, m0.level);
  const ObservationSet obs = h.observe(2);
  const AlphaGrid grid{1.0, 0.5, 25, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(select_tikhonov(ctx, obs, grid, 2.5, 0.1));
}
BENCHMARK(BM_TikhonovSweep)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_TailExperiment(benchmark::State& state) {
  const NamedMatrix m = reference_matrix("gaussian-8x32");
  TailSettings s;
  s.d = kCalibratedD;
  s.n_trials = static_cast<std::size_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(tail_experiment(m.A, m.id, {NoiseKind::gaussian, 1.0, 7}, s));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_TailExperiment)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
