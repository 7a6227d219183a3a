#include <benchmark/benchmark.h>

#include <random>

#include "casner/markup.hpp"
#include "casner/utf8.hpp"

using namespace casner;

namespace {

Sentence long_sentence(std::size_t words) {
  std::string text;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> len(2, 9), ch(0, 25);
  for (std::size_t i = 0; i < words; ++i) {
    if (i) text += ' ';
    const int n = len(rng);
    for (int k = 0; k < n; ++k)
      text += static_cast<char>('a' + ch(rng));
  }
  return Sentence{"bench", text, "en"};
}

std::vector<EntitySpan> some_spans(const Sentence& s, std::size_t count) {
  std::vector<EntitySpan> spans;
  const std::size_t length = utf8::length(s.text);
  const std::size_t stride = length / (count + 1);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t start = (i + 1) * stride;
    spans.push_back({start, start + 3, utf8::slice(s.text, start, start + 3)});
  }
  return spans;
}

}  // namespace

static void BM_RenderMarked(benchmark::State& state) {
  const Sentence s = long_sentence(static_cast<std::size_t>(state.range(0)));
  const auto spans = some_spans(s, 6);
  for (auto _ : state) {
    auto marked = render_marked(s, spans);
    benchmark::DoNotOptimize(marked);
  }
}
BENCHMARK(BM_RenderMarked)->Arg(16)->Arg(64)->Arg(256);

static void BM_ParseMarkedStrict(benchmark::State& state) {
  const Sentence s = long_sentence(static_cast<std::size_t>(state.range(0)));
  const auto generation = render_marked(s, some_spans(s, 6)).text();
  for (auto _ : state) {
    auto parsed = parse_marked(generation, s);
    benchmark::DoNotOptimize(parsed);
  }
}
BENCHMARK(BM_ParseMarkedStrict)->Arg(16)->Arg(64)->Arg(256);

static void BM_ParseMarkedRecovery(benchmark::State& state) {
  const Sentence s = long_sentence(static_cast<std::size_t>(state.range(0)));
  // Prefix forces the LCS path.
  const auto generation =
      "Sure! " + render_marked(s, some_spans(s, 6)).text();
  for (auto _ : state) {
    auto parsed = parse_marked(generation, s);
    benchmark::DoNotOptimize(parsed);
  }
}
BENCHMARK(BM_ParseMarkedRecovery)->Arg(16)->Arg(64)->Arg(128);
