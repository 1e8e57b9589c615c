#include <benchmark/benchmark.h>

#include "ocpscan/candidates.hpp"
#include "ocpscan/scorer.hpp"
#include "ocpscan/synthgen.hpp"

using namespace ocpscan;

namespace {

struct Program {
  InstructionStream stream;
  AnalysisParams params;
};

Program program(std::size_t functions) {
  SynthSpec spec;
  spec.functionCount = functions;
  spec.noiseRatio = 0.7;
  spec.seed = 7;
  auto bin = generate(spec);
  const auto& p = bin.truth.params;
  return {extract_instructions(bin.image, p.region(bin.image.size()), p.layout()), p};
}

void BM_RankCandidates(benchmark::State& state) {
  const auto prog = program(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        rank_candidates(prog.stream, prog.params.callSpec(), prog.params.callCandidateRange));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(prog.stream.size()));
}
BENCHMARK(BM_RankCandidates)->Arg(1000)->Arg(20000);

void BM_ScoreAll(benchmark::State& state) {
  const auto prog = program(static_cast<std::size_t>(state.range(0)));
  const ScoreOptions options{static_cast<unsigned>(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(score_all(prog.stream, prog.params, options));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(prog.stream.size()));
}
BENCHMARK(BM_ScoreAll)->Args({1000, 1})->Args({20000, 1})->Args({20000, 0})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
