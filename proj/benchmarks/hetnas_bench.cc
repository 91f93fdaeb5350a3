/* Copyright 2026 The hetnas Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <benchmark/benchmark.h>

#include <vector>

#include "hetnas/boshnas.h"
#include "hetnas/design_space.h"
#include "hetnas/embedder.h"
#include "hetnas/encoder_sim.h"
#include "hetnas/ged.h"
#include "hetnas/graph.h"
#include "hetnas/rng.h"
#include "hetnas/surrogate.h"

namespace hetnas {
namespace {

const std::vector<ModelCard>& LevelOne() {
  static const auto cards =
      EnumerateCards(DesignSpaceConfig::Standard(), HierarchyLevel::FromIndex(1));
  return cards;
}

void BM_HashCard(benchmark::State& state) {
  const ModelCard card = cards::FlexiMini();
  for (auto _ : state) benchmark::DoNotOptimize(HashCard(card));
}
BENCHMARK(BM_HashCard);

void BM_EnumerateLevelOne(benchmark::State& state) {
  const auto config = DesignSpaceConfig::Standard();
  for (auto _ : state) {
    benchmark::DoNotOptimize(EnumerateCards(config, HierarchyLevel::FromIndex(1)));
  }
}
BENCHMARK(BM_EnumerateLevelOne)->Unit(benchmark::kMillisecond);

// Exact distance between two-layer graphs, or bounded search between
// four-layer graphs, depending on the argument.
void BM_Ged(benchmark::State& state) {
  const int layers = static_cast<int>(state.range(0));
  const auto cost = CostModel::ForConfig(DesignSpaceConfig::Standard());
  std::vector<ComputationalGraph> graphs;
  for (const auto& c : LevelOne()) {
    if (c.l == layers) graphs.push_back(CardToGraph(c));
  }
  GedOptions options;
  options.expansion_budget = 2000;
  Rng rng(1);
  for (auto _ : state) {
    const auto& a = graphs[rng.Below(graphs.size())];
    const auto& b = graphs[rng.Below(graphs.size())];
    benchmark::DoNotOptimize(Ged(a, b, cost, options));
  }
}
BENCHMARK(BM_Ged)->Arg(2)->Arg(4)->Unit(benchmark::kMicrosecond);

void BM_TrainEmbeddings(benchmark::State& state) {
  std::vector<DistancePair> pairs;
  Rng rng(2);
  const int n = static_cast<int>(state.range(0));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      GedValue v{rng.Uniform(), true, 0.0, 0};
      v.upper = v.value;
      pairs.push_back(MakeDistancePair(GraphHash{"g" + std::to_string(i)},
                                       GraphHash{"g" + std::to_string(j)}, v));
    }
  }
  EmbeddingOptions options;
  options.epochs = 20;
  for (auto _ : state) benchmark::DoNotOptimize(TrainEmbeddings(pairs, 16, 0, options));
  state.SetItemsProcessed(state.iterations() * pairs.size() * options.epochs);
}
BENCHMARK(BM_TrainEmbeddings)->Arg(100)->Unit(benchmark::kMillisecond);

std::vector<EvaluationRecord> RandomCorpus(int n, int d, Rng& rng) {
  std::vector<EvaluationRecord> corpus;
  for (int i = 0; i < n; ++i) {
    EvaluationRecord r;
    r.hash = GraphHash{"h" + std::to_string(i)};
    for (int k = 0; k < d; ++k) r.x.push_back(rng.Uniform(-1.0, 1.0));
    r.score = rng.Uniform();
    corpus.push_back(r);
  }
  return corpus;
}

void BM_SurrogateRefit(benchmark::State& state) {
  Rng rng(3);
  const auto corpus = RandomCorpus(static_cast<int>(state.range(0)), 16, rng);
  Surrogate s(16, SurrogateConfig{}, 0);
  s.Fit(corpus);
  for (auto _ : state) benchmark::DoNotOptimize(s.Fit(corpus));
}
BENCHMARK(BM_SurrogateRefit)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_GobiQuery(benchmark::State& state) {
  Rng rng(4);
  EmbeddingTable table(16);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> x(16);
    for (auto& v : x) v = rng.Uniform(-0.5, 0.5);
    table.Add(GraphHash{"t" + std::to_string(i)}, x);
  }
  Surrogate s(16, SurrogateConfig{}, 0);
  s.Fit(RandomCorpus(50, 16, rng));
  const std::vector<bool> allowed(table.size(), true);
  GobiOptions options;
  options.restarts = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(GobiQuery(s, table, allowed, options, rng));
}
BENCHMARK(BM_GobiQuery)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_EncoderForward(benchmark::State& state) {
  const ModelCard card = cards::FlexiMini();
  sim::SimConfig config;
  config.max_seq_len = 128;
  const auto weights = sim::InitWeights(card, 0, config);
  Rng rng(5);
  sim::Tensor x(state.range(0), card.h[0]);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.Normal();
  for (auto _ : state) benchmark::DoNotOptimize(sim::Forward(weights, x));
}
BENCHMARK(BM_EncoderForward)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace hetnas

BENCHMARK_MAIN();
