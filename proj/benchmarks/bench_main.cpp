#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "tokenswap/grammar.hpp"
#include "tokenswap/metrics.hpp"
#include "tokenswap/ngram.hpp"
#include "tokenswap/swap.hpp"

namespace ts = tokenswap;

namespace {

std::vector<std::string> synthetic_corpus(std::size_t texts, std::size_t words, std::uint64_t seed) {
  const auto gset = ts::default_grammar_set();
  const auto& gwords = gset.words();
  std::mt19937_64 rng(seed);
  std::vector<std::string> out;
  for (std::size_t t = 0; t < texts; ++t) {
    std::string text;
    for (std::size_t w = 0; w < words; ++w) {
      if (w) text += ' ';
      text += rng() % 3 == 0 ? "w" + std::to_string(rng() % 2000) : gwords[rng() % gwords.size()];
    }
    out.push_back(std::move(text));
  }
  return out;
}

const ts::NGramModel& model() {
  static const ts::NGramModel m = ts::NGramModel::train(synthetic_corpus(200, 150, 1), {.order = 5});
  return m;
}

void BM_SwapDistribution(benchmark::State& state) {
  const auto& m = model();
  const auto cfg = ts::SwapConfig::identity(ts::bind(ts::default_grammar_set(), m.tokenizer()));
  const auto ids = m.tokenizer().encode("the cat sat on");
  const auto p_main = m.distribution(ids);
  const auto aux = ts::map_aux_distribution(p_main, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(ts::swap_distribution(p_main, aux, cfg));
}
BENCHMARK(BM_SwapDistribution);

void BM_NGramQuery(benchmark::State& state) {
  const auto& m = model();
  const auto ids = m.tokenizer().encode(synthetic_corpus(1, 4, 7).front());
  for (auto _ : state) benchmark::DoNotOptimize(m.distribution(ids));
}
BENCHMARK(BM_NGramQuery);

void BM_Levenshtein(benchmark::State& state) {
  const auto texts = synthetic_corpus(2, static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(ts::levenshtein(std::string_view(texts[0]), std::string_view(texts[1])));
}
BENCHMARK(BM_Levenshtein)->Arg(32)->Arg(128);

void BM_RougeL(benchmark::State& state) {
  const auto texts = synthetic_corpus(2, static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(ts::rouge_l(texts[0], texts[1]));
}
BENCHMARK(BM_RougeL)->Arg(32)->Arg(128);

}  // namespace
BENCHMARK_MAIN();
