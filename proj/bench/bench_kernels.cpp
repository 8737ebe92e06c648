// Serial reference vs OpenMP kernels on the shipped model.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "ucert/kernels.hpp"
#include "ucert/pipeline.hpp"

namespace {

const ucert::CompiledChain& chain() {
  static const auto c = ucert::CompiledChain::compile(ucert::load_model(ucert::default_model_path()));
  return c;
}

void BM_SampleWalksSerial(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(ucert::sample_walks_serial(chain(), 1, 0, static_cast<std::size_t>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SampleWalks(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(ucert::sample_walks(chain(), 1, 0, static_cast<std::size_t>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_TallyWalksSerial(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(ucert::tally_walks_serial(chain(), 1, static_cast<std::size_t>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_TallyWalks(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(ucert::tally_walks(chain(), 1, static_cast<std::size_t>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_SampleWalksSerial)->Arg(5000)->Arg(50000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleWalks)->Arg(5000)->Arg(50000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TallyWalksSerial)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TallyWalks)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
