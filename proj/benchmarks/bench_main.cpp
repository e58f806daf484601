// Throughput of the hot paths: one platoon run, an online monitor over a
// long stream, and a bounded block-network evaluation.

#include <benchmark/benchmark.h>

#include <algorithm>

#include "stasmc/cas.hpp"
#include "stasmc/monitors.hpp"
#include "stasmc/pom.hpp"
#include "stasmc/rng.hpp"
#include "stasmc/sim.hpp"

using namespace stasmc;

static void BM_PlatoonRun(benchmark::State& state) {
  cas::PlatoonConfig c;
  c.n_vehicles = static_cast<int>(state.range(0));
  Model m(cas::build_platoon(c).network);
  SimOptions o;
  o.bound = 3000;
  o.record_events = false;
  for (auto _ : state) {
    o.stream++;
    benchmark::DoNotOptimize(simulate(m, o).end_time);
  }
  state.SetLabel("3000 ms");
}
BENCHMARK(BM_PlatoonRun)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

static void BM_ExecutionMonitor(benchmark::State& state) {
  EventStream s;
  RngStream rng(1, 0);
  double t = 0;
  for (long i = 0; i < state.range(0); ++i) {
    t += rng.uniform(20, 60);
    s.push_back({t, "in", i + 1});
    s.push_back({t + rng.uniform(10, 40), "out", i + 1});
  }
  std::sort(s.begin(), s.end(), [](const TimedEvent& a, const TimedEvent& b) { return a.time < b.time; });
  auto spec = ConstraintSpec::execution(10, 35);
  for (auto _ : state) benchmark::DoNotOptimize(run_monitor(spec, s).size());
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.size()));
}
BENCHMARK(BM_ExecutionMonitor)->Arg(1000)->Arg(100000);

static void BM_UntilPatternEval(benchmark::State& state) {
  auto n = pom::until_within(16);
  pom::StepTrace tr;
  tr.length = static_cast<int>(state.range(0));
  RngStream rng(2, 0);
  for (const char* s : {"p", "q"})
    for (int k = 0; k < tr.length; ++k) tr.signals[s].push_back(rng.bernoulli(0.5) ? 1 : 0);
  for (auto _ : state) benchmark::DoNotOptimize(pom::eval(n, tr).valid());
}
BENCHMARK(BM_UntilPatternEval)->Arg(64)->Arg(4096);

BENCHMARK_MAIN();
