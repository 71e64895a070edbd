#include <random>

#include <benchmark/benchmark.h>

#include "urlearn/features.hpp"
#include "urlearn/gmil.hpp"
#include "urlearn/url.hpp"

namespace {

Eigen::MatrixXd uniform(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

// Time per multiplicative-update iteration as N grows (M_1=40, M_2=20, D=8).
void BM_FitIteration(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Eigen::MatrixXd A = uniform(40, n, 1);
  const Eigen::MatrixXd B = uniform(20, n, 2);
  constexpr int kIter = 20;
  for (auto _ : state) {
    auto model = urlearn::fit(A, B, 8, 1.0, {kIter, 0.0, 1});
    benchmark::DoNotOptimize(model);
  }
  state.SetItemsProcessed(state.iterations() * kIter);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FitIteration)->RangeMultiplier(2)->Range(50, 400)->Unit(benchmark::kMillisecond)->Complexity();

void BM_EmbedVideo(benchmark::State& state) {
  urlearn::SyntheticSpec spec;
  spec.videos_per_class = 6;
  spec.seed = 5;
  const auto data = urlearn::synthesize_corpus(spec);
  const auto model = urlearn::build_bags(data.seen, 2, static_cast<int>(state.range(0)), 5);
  const auto& frames = data.unseen.videos().front().frames;
  for (auto _ : state) benchmark::DoNotOptimize(urlearn::embed_video(model, frames));
}
BENCHMARK(BM_EmbedVideo)->Arg(10)->Arg(50)->Arg(200);

void BM_PairwiseAffinities(benchmark::State& state) {
  const Eigen::MatrixXd X = uniform(40, state.range(0), 3);
  for (auto _ : state) benchmark::DoNotOptimize(urlearn::pairwise_affinities(X));
}
BENCHMARK(BM_PairwiseAffinities)->Arg(50)->Arg(200);

}  // namespace
BENCHMARK_MAIN();
