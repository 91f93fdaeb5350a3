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

#include "hetnas/pipeline.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "hetnas/error.h"

namespace hetnas {
namespace {

// 32 two-layer level-1 cards: SA/LT variants, two hidden sizes, four stacks.
PipelineConfig SmallConfig() {
  PipelineConfig c;
  c.space.layer_counts = {2};
  c.space.ops = {OpKind::kSA, OpKind::kLT};
  c.space.heads = {2};
  c.space.hidden = {128, 256};
  c.space.ff_dims = {512, 1024};
  c.space.ff_stack_depths = {1, 3};
  c.space.op_params = {{OpKind::kSA, {"SDP", "WMA"}}, {OpKind::kLT, {"DFT", "DCT"}}};
  c.ged.expansion_budget = 5000;
  c.embedding_dim = 4;
  c.embedding.epochs = 80;
  c.search.max_evaluations = 8;
  c.search.convergence_eps = 0.0;
  c.search.surrogate.hidden = {16, 16};
  c.search.surrogate.epochs = 40;
  c.search.surrogate.refit_epochs = 10;
  c.search.surrogate.n_mc = 6;
  c.search.gobi_restarts = 4;
  c.search.gobi_max_iters = 10;
  c.search.knn_k = 5;
  c.search.seed = 2;
  c.crossover.top_m = 2;
  c.crossover.neighbors = 2;
  c.crossover.max_child_cards = 60;
  return c;
}

TEST(Pipeline, ThreeLevels) {
  const PipelineConfig config = SmallConfig();
  ASSERT_TRUE(config.space.Problems().empty());
  SyntheticOracle oracle;
  std::vector<int> seen_levels;
  const auto runs = RunHierarchy(config, oracle, {},
                                 [&](const LevelRun& r) { seen_levels.push_back(r.artifacts.level.index); });
  ASSERT_EQ(runs.size(), 3u);
  EXPECT_EQ(seen_levels, (std::vector<int>{1, 2, 3}));

  EXPECT_EQ(runs[0].artifacts.level.stack_size, 2);
  EXPECT_EQ(runs[1].artifacts.level.stack_size, 1);
  EXPECT_FALSE(runs[1].artifacts.level.hetero_ff);
  EXPECT_EQ(runs[2].artifacts.level.stack_size, 1);
  EXPECT_TRUE(runs[2].artifacts.level.hetero_ff);

  EXPECT_EQ(runs[0].artifacts.library.size(), 32u);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    EXPECT_EQ(r.artifacts.embedding.table.size(), r.artifacts.library.size());
    EXPECT_EQ(r.artifacts.embedding.table.dim(), 4);
    // Small child libraries are exhausted before the budget runs out.
    const std::size_t budget = std::min<std::size_t>(8, r.artifacts.library.size());
    EXPECT_EQ(r.search.evaluations, budget) << "level " << i + 1;
    EXPECT_EQ(r.search.exhausted, budget < 8) << "level " << i + 1;
    EXPECT_EQ(r.top.size(), 2u);
    EXPECT_EQ(r.neighbors.size(), 2u);
    EXPECT_EQ(r.transition.has_value(), i < 2);
    for (const auto& e : r.search.ledger) EXPECT_TRUE(r.artifacts.library.Contains(e.hash));
  }

  // Each transition derives the next library, and the next search starts
  // from the previous best models.
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& t = *runs[i].transition;
    EXPECT_EQ(t.child_level, runs[i + 1].artifacts.level);
    EXPECT_EQ(runs[i + 1].artifacts.library.size(), t.children.size());
    std::set<GraphHash> children;
    for (const auto& c : t.children) children.insert(HashCard(c));
    for (const auto& p : t.parents) EXPECT_TRUE(children.contains(HashCard(p)));
    const auto& next = runs[i + 1].search.ledger;
    ASSERT_GE(next.size(), runs[i].top.size());
    for (std::size_t k = 0; k < runs[i].top.size(); ++k) {
      EXPECT_EQ(next[k].branch, Branch::kSeed);
      EXPECT_EQ(next[k].hash, HashCard(runs[i].top[k]));
    }
  }
}

TEST(Pipeline, DeterministicGivenSeed) {
  PipelineConfig config = SmallConfig();
  config.last_level = 2;
  SyntheticOracle oracle;
  auto ledger = [&] {
    std::vector<GraphHash> out;
    for (const auto& r : RunHierarchy(config, oracle, cards::SeedModels())) {
      for (const auto& e : r.search.ledger) out.push_back(e.hash);
    }
    return out;
  };
  EXPECT_EQ(ledger(), ledger());
}

TEST(Pipeline, TopCardsOrder) {
  SearchResult r;
  const auto a = HashCard(cards::BertTiny()), b = HashCard(cards::BertMini());
  LedgerEntry ea, eb;
  ea.hash = a;
  ea.score = 0.5;
  eb.iter = 1;
  eb.hash = b;
  eb.score = 0.5;
  r.ledger.push_back(ea);
  r.ledger.push_back(eb);
  LedgerEntry failed;
  failed.hash = HashCard(cards::FlexiMini());
  r.ledger.push_back(failed);
  const auto lib = BuildLibrary({cards::BertTiny(), cards::BertMini(), cards::FlexiMini()});
  const auto top = TopCards(r, lib, 5);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(HashCard(top[0]), std::min(a, b));
  EXPECT_EQ(TopCards(r, lib, 1).size(), 1u);
}

TEST(Pipeline, ConfigJson) {
  const PipelineConfig c = SmallConfig();
  const auto back = PipelineConfig::FromJson(c.ToJson());
  EXPECT_EQ(back.ToJson(), c.ToJson());
  EXPECT_EQ(PipelineConfig::FromJson(nlohmann::json::object()).ToJson(), PipelineConfig().ToJson());
  EXPECT_THROW(PipelineConfig::FromJson({{"first_level", 3}, {"last_level", 2}}), FormatError);
  EXPECT_THROW(PipelineConfig::FromJson({{"last_level", 4}}), FormatError);
  EXPECT_THROW(PipelineConfig::FromJson({{"embedding_dim", 0}}), FormatError);
  EXPECT_THROW(PipelineConfig::FromJson({{"workers", "many"}}), FormatError);
}

TEST(Pipeline, PrepareLevelNeedsTwoGraphs) {
  EXPECT_THROW(PrepareLevel({cards::BertTiny()}, HierarchyLevel::FromIndex(1), SmallConfig(), 0),
               InvalidArgumentError);
}

}  // namespace
}  // namespace hetnas
