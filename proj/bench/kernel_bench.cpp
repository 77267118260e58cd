// Serial vs OpenMP backups on random instances. Thread count follows
// OMP_NUM_THREADS; the "threads" counter records what the run used.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "eqvi/bench.hpp"
#include "eqvi/kernels.hpp"
#include "eqvi/noise.hpp"

namespace {

using namespace eqvi;

struct Fixture {
  Mdp mdp;
  std::vector<double> v;
  std::vector<double> out;

  explicit Fixture(std::size_t states)
      : mdp(generate_random_mdp(states, 5, 0.9, 1)), v(states), out(states * 5) {
    for (std::size_t s = 0; s < states; ++s) v[s] = static_cast<double>(s % 17) * 0.1;
  }
};

template <void (*Backup)(const Mdp&, std::span<const double>, std::span<double>)>
void expected(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Backup(f.mdp, f.v, f.out);
    benchmark::DoNotOptimize(f.out.data());
  }
  const double pairs = static_cast<double>(f.out.size());
  state.counters["pairs/s"] = benchmark::Counter(pairs, benchmark::Counter::kIsIterationInvariantRate);
  state.counters["threads"] = omp_get_max_threads();
}

template <void (*Backup)(const Mdp&, std::span<const double>, const NoiseBlock&, std::span<double>)>
void empirical(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  const auto n = static_cast<std::size_t>(state.range(1));
  const NoiseBlock block = draw_noise_block(NoiseStream(2), 0, n, f.mdp.num_states(), f.mdp.num_actions());
  for (auto _ : state) {
    Backup(f.mdp, f.v, block, f.out);
    benchmark::DoNotOptimize(f.out.data());
  }
  const double samples = static_cast<double>(f.out.size() * n);
  state.counters["samples/s"] = benchmark::Counter(samples, benchmark::Counter::kIsIterationInvariantRate);
  state.counters["threads"] = omp_get_max_threads();
}

void noise_block(benchmark::State& state) {
  const auto states = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const NoiseStream stream(3);
  std::int64_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(draw_noise_block(stream, k++, n, states, 5));
  state.counters["samples/s"] =
      benchmark::Counter(static_cast<double>(states * 5 * n), benchmark::Counter::kIsIterationInvariantRate);
}

BENCHMARK(expected<kernels::expected_backup_serial>)->Name("expected/serial")->Arg(100)->Arg(500);
BENCHMARK(expected<kernels::expected_backup_omp>)->Name("expected/omp")->Arg(100)->Arg(500);
BENCHMARK(empirical<kernels::empirical_backup_serial>)
    ->Name("empirical/serial")
    ->Args({100, 30})
    ->Args({500, 30})
    ->Args({500, 200});
BENCHMARK(empirical<kernels::empirical_backup_omp>)
    ->Name("empirical/omp")
    ->Args({100, 30})
    ->Args({500, 30})
    ->Args({500, 200});
BENCHMARK(noise_block)->Name("noise_block")->Args({100, 30})->Args({500, 30});

}  // namespace

BENCHMARK_MAIN();
