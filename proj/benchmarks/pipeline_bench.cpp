#include <benchmark/benchmark.h>

#include "bench_scenes.hpp"
#include "situgen/pipeline.hpp"

using namespace situgen;

static void BM_GenerateTemplated(benchmark::State& state) {
  const Scene scene = bench::synthetic_room(32, 5);
  Situation s;
  s.location = {1.0, 1.0, 0.0};
  const SituatedGraph graph = build_situated_graph(scene, s, {}, "bench:s0");
  Rng rng(6);
  for (auto _ : state) {
    for (const auto c : kAllCategories) benchmark::DoNotOptimize(generate_templated(graph, c, rng, 10));
  }
}
BENCHMARK(BM_GenerateTemplated);

static void BM_RunPipeline(benchmark::State& state) {
  RunConfig c;
  c.seed = 3;
  c.scenes_dir = std::filesystem::path(SITUGEN_FIXTURES_DIR) / "scenes";
  c.workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(c));
}
BENCHMARK(BM_RunPipeline)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
