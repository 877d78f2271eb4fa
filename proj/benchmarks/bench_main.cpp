#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "valdet/alpha.hpp"
#include "valdet/corpus.hpp"
#include "valdet/embed.hpp"
#include "valdet/logitboost.hpp"
#include "valdet/topicmodel.hpp"

namespace {

using namespace valdet;

// Three coders over n units, four categories, about 10% missing.
std::vector<std::vector<int>> random_units(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> code(0, 3);
  std::bernoulli_distribution missing(0.1);
  std::vector<std::vector<int>> units(n);
  for (auto& u : units)
    for (int k = 0; k < 3; ++k)
      if (!missing(rng)) u.push_back(code(rng));
  return units;
}

corpus::Corpus random_corpus(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::string> syllables{"ма", "ло", "ре", "ки", "ну", "та", "со", "ви", "де", "жу"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> syl(0, syllables.size() - 1), len(10, 40), wlen(2, 4);
  std::vector<corpus::Post> posts;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    for (std::size_t w = 0, L = len(rng); w < L; ++w) {
      if (w) text += ' ';
      for (std::size_t s = 0, S = wlen(rng); s < S; ++s) text += syllables[syl(rng)];
    }
    posts.push_back(corpus::make_post("p" + std::to_string(i), "u" + std::to_string(i % 97), text));
  }
  return corpus::Corpus(std::move(posts));
}

void BM_Alpha(benchmark::State& state) {
  const auto units = random_units(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(annot::krippendorff_alpha_units(units).alpha);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Alpha)->Arg(1000)->Arg(10000);

void BM_ArtmIteration(benchmark::State& state) {
  const auto corpus = random_corpus(static_cast<std::size_t>(state.range(0)), 2);
  const auto matrix = topic::build_matrix(corpus, 2);
  const auto schedule = topic::RegularizerSchedule::plain_em(1);
  for (auto _ : state) benchmark::DoNotOptimize(topic::fit_artm(matrix, 20, schedule, 3).log_likelihood);
}
BENCHMARK(BM_ArtmIteration)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_HashEmbed(benchmark::State& state) {
  const auto corpus = random_corpus(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(embed::hash_embed(corpus, 512, 5).matrix().data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HashEmbed)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_LogitBoost(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  ml::Dataset ds;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  ds.features.resize(n, 32);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < 32; ++j) ds.features(i, j) = g(rng);
    ds.labels.push_back(ds.features(i, 0) + 0.5 * ds.features(i, 1) + 0.5 * g(rng) > 0 ? 1 : 0);
    ds.ids.push_back(std::to_string(i));
  }
  ml::LogitBoostParams params;
  params.rounds = 50;
  for (auto _ : state) benchmark::DoNotOptimize(ml::train_logitboost(ds, params).stumps.size());
}
BENCHMARK(BM_LogitBoost)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
