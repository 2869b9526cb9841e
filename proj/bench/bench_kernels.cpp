// Serial reference kernels against their OpenMP versions. The second argument
// of every benchmark selects the path: 0 serial, 1 parallel.

#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "robsub/imgsum.hpp"
#include "robsub/objective.hpp"
#include "robsub/parallel.hpp"
#include "robsub/random.hpp"
#include "robsub/satsim.hpp"

namespace {

using namespace robsub;

Execution exec_of(const benchmark::State& state) {
  return state.range(1) == 0 ? Execution::kSerial : Execution::kParallel;
}

void BM_CandidateGains(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto d = std::make_shared<const imgsum::DistanceMatrix>(
      imgsum::distance_matrix(imgsum::synthetic_embeddings(n, 32, 7), Execution::kSerial));
  auto family = imgsum::image_task_family(d);
  const AggregateObjective g(family, SimplexDistribution::uniform(family->size()), AggregateMode::kl_robust(0.1));
  auto cursor = g.cursor();
  cursor->add(0);
  cursor->add(n / 2);
  const auto candidates = cursor->selection().complement_elements();
  std::vector<double> gains(candidates.size());
  for (auto _ : state) {
    evaluate_gains(*cursor, candidates, gains, exec_of(state));
    benchmark::DoNotOptimize(gains.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(candidates.size()));
}

void BM_VisibilityLists(benchmark::State& state) {
  satsim::WalkerDelta wd;
  wd.total = static_cast<int>(state.range(0));
  wd.planes = 12;
  const satsim::Constellation c(wd);
  const auto sats = c.positions(0.0);
  const satsim::CoverageGrid grid(2.0);
  for (auto _ : state) {
    auto lists = satsim::visibility_lists(sats, grid.centers(), wd.fov_half_angle, exec_of(state));
    benchmark::DoNotOptimize(lists.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sats.size() * grid.size()));
}

void BM_DistanceMatrix(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto emb = imgsum::synthetic_embeddings(n, 64, 11);
  for (auto _ : state) {
    auto d = imgsum::distance_matrix(emb, exec_of(state));
    benchmark::DoNotOptimize(d.row(0));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

}  // namespace

BENCHMARK(BM_CandidateGains)->ArgsProduct({{200, 819}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VisibilityLists)->ArgsProduct({{60, 240}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DistanceMatrix)->ArgsProduct({{200, 819}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
