#include <benchmark/benchmark.h>

#include <vector>

#include "entropic/entropic.hpp"

using namespace entropic;

namespace {

Mixture fifteen_points() {
  const auto loc = standardized_locations(15, 1);
  std::vector<std::vector<double>> pts;
  for (double a : loc) pts.push_back({a});
  return Mixture::points(std::vector<double>(15, 1.0 / 15), pts);
}

Mixture gaussian_mixture(std::size_t K, std::size_t D) {
  std::vector<std::vector<double>> m(K, std::vector<double>(D)), v(K, std::vector<double>(D, 0.1));
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t d = 0; d < D; ++d) m[k][d] = double(k) - 0.5 * double(d);
  return Mixture::gaussian(std::vector<double>(K, 1.0 / double(K)), m, v);
}

}  // namespace

static void BM_Denoise(benchmark::State& state) {
  const auto K = static_cast<std::size_t>(state.range(0)), D = static_cast<std::size_t>(state.range(1));
  const auto dist = gaussian_mixture(K, D);
  std::vector<double> x(D, 0.3), out(D);
  for (auto _ : state) {
    denoise(dist, NoiseLevel{0.5, 1.0}, x, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Denoise)->Args({1, 1})->Args({15, 1})->Args({15, 64})->Args({64, 256});

static void BM_Generate(benchmark::State& state) {
  const auto ve = DiffusionSpec::ve();
  const auto dist = fifteen_points();
  const auto sched = edm_schedule(ve, 0.002, 80.0, 7.0, static_cast<std::size_t>(state.range(0)));
  const SolverOptions opt{SolverKind::ddim_stochastic, true};
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate(ve, sched, exact_denoiser(dist), 1, opt, 10000, seed++));
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_Generate)->Arg(3)->Arg(15)->Arg(63)->Unit(benchmark::kMillisecond);

static void BM_ErrorTableMc(benchmark::State& state) {
  const auto ve = DiffusionSpec::ve();
  const auto dist = fifteen_points();
  const auto grid = edm_time_grid(ve, 128);
  const auto M = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_error_table(exact_denoiser(dist), ve, mixture_sampler(dist), 1, grid, M, 1));
  }
}
BENCHMARK(BM_ErrorTableMc)->Arg(1000)->Arg(4096)->Unit(benchmark::kMillisecond);

static void BM_ErrorTableQuadrature(benchmark::State& state) {
  const auto ve = DiffusionSpec::ve();
  const auto dist = fifteen_points();
  const auto grid = edm_time_grid(ve, 128);
  for (auto _ : state) benchmark::DoNotOptimize(exact_error_table(dist, ve, grid));
}
BENCHMARK(BM_ErrorTableQuadrature)->Unit(benchmark::kMillisecond);

static void BM_KdeKl(benchmark::State& state) {
  const auto target = Mixture::isotropic_gaussian(1.0);
  const auto samples = sample_data(target, 10000, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kde_kl(samples, target, 0.01, 1000, 3));
}
BENCHMARK(BM_KdeKl)->Unit(benchmark::kMillisecond);

static void BM_MakeStream(benchmark::State& state) {
  std::uint64_t i = 0;
  for (auto _ : state) {
    auto rng = make_stream(1, i++, stream_domain::generation);
    benchmark::DoNotOptimize(rng());
  }
}
BENCHMARK(BM_MakeStream);

BENCHMARK_MAIN();
