#include <benchmark/benchmark.h>

#include "ftheat/kalman.hpp"
#include "ftheat/model1.hpp"
#include "ftheat/simulate.hpp"

using namespace ftheat;

namespace {

Profile correlated() {
  Profile p;
  p.mu = Vec2(1.0, 1.3);
  p.sigma << 0.3, 0.15, 0.15, 0.3;
  return p;
}

Mixture two_components() {
  Mixture m;
  m.components = {{0.6, correlated()}, {0.4, correlated()}};
  m.components[1].profile.mu = Vec2(2.0, 2.3);
  return m;
}

}  // namespace

static void BM_PatternProbabilities(benchmark::State& state) {
  const QuadratureRule rule(static_cast<int>(state.range(0)));
  const auto p = correlated();
  for (auto _ : state) benchmark::DoNotOptimize(pattern_probabilities(p, rule));
}
BENCHMARK(BM_PatternProbabilities)->Arg(12)->Arg(24)->Arg(48);

static void BM_LogLikelihood(benchmark::State& state) {
  ScheduleSpec s;
  s.players = static_cast<std::size_t>(state.range(0));
  s.games_per_player = 50;
  s.trips_per_game = {0.5, 0.3, 0.2};
  s.shots_per_trip = {0.3, 0.65, 0.05};
  const auto mix = two_components();
  const auto data = gen_dataset(mix, s);
  const QuadratureRule rule;
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihood(data.trips, mix, rule));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.trips.trip_count()));
}
BENCHMARK(BM_LogLikelihood)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_EmIteration(benchmark::State& state) {
  ScheduleSpec s;
  s.players = 300;
  s.games_per_player = 100;
  const auto data = gen_dataset(two_components(), s);
  EmConfig c;
  c.components = static_cast<std::size_t>(state.range(0));
  c.max_iterations = 5;
  for (auto _ : state) benchmark::DoNotOptimize(em_fit(data.trips, c));
}
BENCHMARK(BM_EmIteration)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_KalmanSmooth(benchmark::State& state) {
  std::vector<DisplacementEstimate> binned;
  for (int h = 1; h <= 2; ++h)
    for (int b = 1; b <= kTimeBins; ++b) {
      DisplacementEstimate e;
      e.h = h;
      e.bin = b;
      e.delta = Vec2(0.01 * b, -0.005 * b);
      e.cov << 0.01, 0.002, 0.002, 0.012;
      e.n_trips = 100;
      binned.push_back(e);
    }
  const auto noise = state.range(0) ? ProcessNoise::automatic() : ProcessNoise::of(1e-3 * Mat2::Identity());
  for (auto _ : state) benchmark::DoNotOptimize(kalman_smooth(binned, noise));
}
BENCHMARK(BM_KalmanSmooth)->Arg(0)->Arg(1);

static void BM_GenDataset(benchmark::State& state) {
  ScheduleSpec s;
  s.players = 1000;
  s.games_per_player = 100;
  const auto mix = two_components();
  for (auto _ : state) benchmark::DoNotOptimize(gen_dataset(mix, s));
}
BENCHMARK(BM_GenDataset)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
