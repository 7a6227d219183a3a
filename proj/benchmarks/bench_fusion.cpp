#include <benchmark/benchmark.h>

#include <random>

#include "casner/extraction.hpp"

using namespace casner;

namespace {

std::vector<std::vector<EntitySpan>> random_rounds(int rounds, int spans,
                                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> start(0, 200), len(1, 10);
  std::vector<std::vector<EntitySpan>> out(static_cast<std::size_t>(rounds));
  for (auto& round : out)
    for (int i = 0; i < spans; ++i) {
      const auto s = static_cast<std::size_t>(start(rng));
      const auto e = s + static_cast<std::size_t>(len(rng));
      std::string surface;
      for (std::size_t k = s; k < e; ++k)
        surface += static_cast<char>('a' + (k % 26));
      round.push_back({s, e, surface});
    }
  return out;
}

}  // namespace

static void BM_FuseResults(benchmark::State& state) {
  const auto rounds = random_rounds(static_cast<int>(state.range(0)),
                                    static_cast<int>(state.range(1)), 3);
  for (auto _ : state) {
    auto fused = fuse_results(rounds);
    benchmark::DoNotOptimize(fused);
  }
}
BENCHMARK(BM_FuseResults)->Args({3, 8})->Args({4, 16})->Args({8, 32});
