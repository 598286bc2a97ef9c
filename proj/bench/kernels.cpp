// Serial reference vs OpenMP kernels. Set BOHM_WORKERS to pin the pool size.
#include <benchmark/benchmark.h>

#include <numbers>
#include <vector>

#include "bohm/analysis.hpp"
#include "bohm/dynamics.hpp"
#include "bohm/nodal.hpp"
#include "bohm/parallel.hpp"

using namespace bohm;

namespace {

SystemSpec entangled(double a0, std::optional<int> n_f = std::nullopt) {
  SystemSpec s;
  s.a0 = s.b0 = a0;
  s.n_f = n_f;
  return s;
}

std::vector<Point2> starts(int n) {
  std::vector<Point2> pts;
  for (int i = 0; i < n; ++i) pts.push_back({-3.0 + 6.0 * i / n, 0.4 + 0.1 * i});
  return pts;
}

IntegratorSettings short_run() {
  IntegratorSettings st;
  st.t_end = 50.0;
  return st;
}

template <bool Parallel>
void BM_Ensemble(benchmark::State& state) {
  const Wavefunction wf(entangled(2.5));
  const auto pts = starts(static_cast<int>(state.range(0)));
  const auto st = short_run();
  for (auto _ : state) {
    auto recs = Parallel ? integrate_ensemble(wf, pts, st) : serial::integrate_ensemble(wf, pts, st);
    benchmark::DoNotOptimize(recs.data());
  }
  state.counters["workers"] = Parallel ? worker_count() : 1;
}

template <bool Parallel>
void BM_GridEnsemble(benchmark::State& state) {
  const Wavefunction wf(entangled(2.5));
  const auto pts = starts(static_cast<int>(state.range(0)));
  const auto st = short_run();
  for (auto _ : state) {
    auto g = Parallel ? accumulate_ensemble(wf, pts, st, GridSpec{}) : serial::accumulate_ensemble(wf, pts, st, GridSpec{});
    benchmark::DoNotOptimize(g.counts().data());
  }
}

template <bool Parallel>
void BM_Contour(benchmark::State& state) {
  const Wavefunction wf(entangled(0.5, 4));
  for (auto _ : state) {
    auto cells = Parallel ? velocity_contour_nodes(wf, 0.0, 2.0, 0.1, 500.0, Rect::square(6.0), 200)
                          : serial::velocity_contour_nodes(wf, 0.0, 2.0, 0.1, 500.0, Rect::square(6.0), 200);
    benchmark::DoNotOptimize(cells.data());
  }
}

template <bool Parallel>
void BM_Sweep(benchmark::State& state) {
  SweepRequest req;
  req.base = entangled(2.5);
  req.n_f_list = {2, 6, 12};
  req.c2_list = {0.2, std::numbers::sqrt2 / 2.0};
  req.settings = short_run();
  for (auto _ : state) {
    auto e = Parallel ? truncation_sweep(req) : serial::truncation_sweep(req);
    benchmark::DoNotOptimize(e.data());
  }
}

void BM_NodesNumeric(benchmark::State& state) {
  const Wavefunction wf(entangled(2.5));
  for (auto _ : state) {
    auto r = nodes_numeric(wf, 2.3, Rect::square(9.0), static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(r.nodes.data());
  }
}

void BM_Velocity(benchmark::State& state) {
  const Wavefunction wf(state.range(0) ? entangled(2.5, 12) : entangled(2.5));
  double t = 0.0;
  for (auto _ : state) {
    Velocity v;
    benchmark::DoNotOptimize(try_velocity(wf, 0.3, -1.2, t, v));
    t += 1e-3;
  }
}

}  // namespace

BENCHMARK(BM_Ensemble<false>)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Ensemble<true>)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridEnsemble<false>)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridEnsemble<true>)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Contour<false>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Contour<true>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sweep<false>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sweep<true>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NodesNumeric)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Velocity)->Arg(0)->Arg(1);

BENCHMARK_MAIN();
