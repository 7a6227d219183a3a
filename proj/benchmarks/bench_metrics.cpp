#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "casner/backend.hpp"
#include "casner/metrics.hpp"

using namespace casner;

namespace {

CategoryDistribution random_distribution(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> count(1, 500);
  std::map<std::string, std::uint64_t> counts;
  for (std::size_t i = 0; i < n; ++i)
    counts["cat" + std::to_string(i)] = count(rng);
  return CategoryDistribution::from_counts(counts);
}

}  // namespace

static void BM_DistributionMetrics(benchmark::State& state) {
  const auto d = random_distribution(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(normalized_entropy(d));
    benchmark::DoNotOptimize(gini(d));
    benchmark::DoNotOptimize(variation_coefficient(d));
  }
}
BENCHMARK(BM_DistributionMetrics)->Arg(8)->Arg(31)->Arg(155);

static void BM_Cohesion(benchmark::State& state) {
  HashEmbeddingBackend emb(64);
  std::vector<std::string> texts;
  for (int i = 0; i < state.range(0); ++i)
    texts.push_back("entity " + std::to_string(i));
  const auto vectors = emb.embed_texts(texts);
  for (auto _ : state) benchmark::DoNotOptimize(cohesion(vectors));
}
BENCHMARK(BM_Cohesion)->Arg(16)->Arg(64)->Arg(200);
