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

#include "hetnas/ged.h"

#include <gtest/gtest.h>

#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "hetnas/error.h"
#include "hetnas/rng.h"
#include "test_support.h"

namespace hetnas {
namespace {

using namespace test;

class GedTest : public ::testing::Test {
 protected:
  const DesignSpaceConfig config_ = DesignSpaceConfig::Standard();
  const CostModel cost_ = CostModel::ForConfig(config_);
  const std::vector<ComputeBlock> catalog_ = BlockCatalog(config_);
};

TEST_F(GedTest, ComplexityRankIsTiered) {
  const auto ranked = ComplexityRank(catalog_);
  ASSERT_EQ(ranked.size(), catalog_.size());
  for (std::size_t i = 1; i < ranked.size(); ++i) {
    EXPECT_LE(ComplexityTier(ranked[i - 1]), ComplexityTier(ranked[i]));
  }
  EXPECT_EQ(ComplexityTier(ranked.front()), 0);
  EXPECT_EQ(ranked.back().op, OpKind::kSA);
  EXPECT_LT(ComplexityTier(ComputeBlock::Head(128, OpKind::kLT, "DCT")),
            ComplexityTier(ComputeBlock::Head(128, OpKind::kDSC, "5")));
  EXPECT_LT(ComplexityTier(ComputeBlock::Head(128, OpKind::kDSC, "9")),
            ComplexityTier(ComputeBlock::Head(128, OpKind::kSA, "SDP")));
  EXPECT_LT(FlopProxy(ComputeBlock::FeedForward(512), 128),
            FlopProxy(ComputeBlock::FeedForward(1024), 128));
  auto pos = [&](const std::string& label) { return cost_.RankOf(label); };
  EXPECT_LT(pos("h-128/SA-SDP"), pos("h-128/SA-WMA"));
  EXPECT_LT(pos("h-128/LT-DFT"), pos("h-128/LT-DCT"));
  EXPECT_LT(pos("h-128/DSC-5"), pos("h-128/DSC-9"));
  EXPECT_LT(pos("ff-512"), pos("ff-1024"));
}

TEST_F(GedTest, CostModelUnits) {
  const int b = cost_.size();
  EXPECT_EQ(b, static_cast<int>(catalog_.size()));
  EXPECT_DOUBLE_EQ(cost_.UnitValue(), 1.0 / (2.0 * b));
  EXPECT_DOUBLE_EQ(cost_.Insertion(0), 1.0 / b);
  EXPECT_DOUBLE_EQ(cost_.Deletion(b - 1), 1.0);
  EXPECT_DOUBLE_EQ(cost_.Substitution(2, 5), 3.0 / b);
  EXPECT_DOUBLE_EQ(cost_.Substitution(4, 4), 0.0);
  EXPECT_DOUBLE_EQ(cost_.EdgeCost(), 0.5 / b);
  EXPECT_THROW(cost_.RankOf("nope"), InvalidArgumentError);
}

TEST_F(GedTest, IdentityAndSymmetryOnLibraryGraphs) {
  const auto lib = BuildLibrary(cards::SeedModels());
  for (const auto& e : lib.entries()) {
    const auto v = Ged(e.graph, e.graph, cost_);
    EXPECT_TRUE(v.exact);
    EXPECT_EQ(v.value, 0.0);
  }
  Rng rng(4);
  const auto cards = EnumerateCards(config_, HierarchyLevel::FromIndex(1));
  for (int t = 0; t < 30; ++t) {
    const auto a = CardToGraph(cards[rng.Below(cards.size())]);
    const auto b = CardToGraph(cards[rng.Below(cards.size())]);
    GedOptions opt;
    opt.expansion_budget = 20000;
    const auto ab = Ged(a, b, cost_, opt);
    const auto ba = Ged(b, a, cost_, opt);
    EXPECT_EQ(ab.value, ba.value);
    EXPECT_EQ(ab.exact, ba.exact);
    EXPECT_EQ(ab.upper, ba.upper);
    EXPECT_LE(ab.value, ab.upper);
    EXPECT_GE(ab.value, GedLowerBound(a, b, cost_) - 1e-12);
  }
}

TEST_F(GedTest, NodeRelabelingDoesNotChangeDistance) {
  Rng rng(8);
  const auto a = CardToGraph(cards::BertTiny());
  const auto b = CardToGraph(cards::SeedModels()[8]);
  std::vector<int> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  rng.Shuffle(std::span<int>(perm));
  EXPECT_EQ(Ged(a, b, cost_).value, Ged(a.Permuted(perm), b, cost_).value);
}

TEST_F(GedTest, MatchesExhaustiveMappingOracle) {
  Rng rng(5);
  for (int t = 0; t < 300; ++t) {
    const int n1 = 1 + static_cast<int>(rng.Below(t < 40 ? 8 : 6));
    const int n2 = 1 + static_cast<int>(rng.Below(t < 40 ? 8 : 6));
    const auto g1 = RandomDag(rng, catalog_, n1);
    const auto g2 = RandomDag(rng, catalog_, n2);
    const double oracle = ExhaustiveGed(g1, g2, cost_);
    const auto v = Ged(g1, g2, cost_);
    ASSERT_TRUE(v.exact);
    ASSERT_NEAR(v.value, oracle, 1e-12) << n1 << "x" << n2;
    ASSERT_EQ(v.value, Ged(g2, g1, cost_).value);
  }
}

TEST_F(GedTest, EditPathCostMatchesDirectComputation) {
  Rng rng(6);
  for (int t = 0; t < 200; ++t) {
    const auto g1 = RandomDag(rng, catalog_, 1 + static_cast<int>(rng.Below(7)));
    const auto g2 = RandomDag(rng, catalog_, 1 + static_cast<int>(rng.Below(7)));
    std::vector<int> targets(g2.size());
    std::iota(targets.begin(), targets.end(), 0);
    rng.Shuffle(std::span<int>(targets));
    std::vector<int> phi(g1.size(), -1);
    for (std::size_t u = 0; u < g1.size() && u < targets.size(); ++u) {
      if (rng.Bernoulli(0.7)) phi[u] = targets[u];
    }
    ASSERT_NEAR(EditPathCost(g1, g2, cost_, phi), MappingCost(g1, g2, cost_, phi), 1e-12);
  }
}

TEST_F(GedTest, TriangleInequalityOnRandomTriples) {
  // Two-layer level-1 graphs: exact distances stay cheap.
  std::vector<ComputationalGraph> graphs;
  for (const auto& c : EnumerateCards(config_, HierarchyLevel::FromIndex(1))) {
    if (c.l == 2) graphs.push_back(CardToGraph(c));
  }
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    const auto& a = graphs[rng.Below(graphs.size())];
    const auto& b = graphs[rng.Below(graphs.size())];
    const auto& c = graphs[rng.Below(graphs.size())];
    const auto ab = Ged(a, b, cost_), bc = Ged(b, c, cost_), ac = Ged(a, c, cost_);
    ASSERT_TRUE(ab.exact && bc.exact && ac.exact);
    ASSERT_LE(ac.value, ab.value + bc.value + 1e-12);
  }
  // Small random DAGs as well.
  for (int t = 0; t < 100; ++t) {
    const auto a = RandomDag(rng, catalog_, 1 + static_cast<int>(rng.Below(7)));
    const auto b = RandomDag(rng, catalog_, 1 + static_cast<int>(rng.Below(7)));
    const auto c = RandomDag(rng, catalog_, 1 + static_cast<int>(rng.Below(7)));
    ASSERT_LE(Ged(a, c, cost_).value, Ged(a, b, cost_).value + Ged(b, c, cost_).value + 1e-12);
  }
}

TEST_F(GedTest, BudgetsProduceFlaggedBounds) {
  const auto a = CardToGraph(cards::BertMini());
  const auto b = CardToGraph(cards::AblationNoHeteroscedastic());
  GedOptions tight;
  tight.expansion_budget = 1;
  const auto v = Ged(a, b, cost_, tight);
  EXPECT_FALSE(v.exact);
  EXPECT_LE(v.value, v.upper);
  GedOptions tiny_nodes;
  tiny_nodes.node_budget = 4;
  const auto w = Ged(a, b, cost_, tiny_nodes);
  EXPECT_FALSE(w.exact);
  EXPECT_DOUBLE_EQ(w.value, GedLowerBound(a, b, cost_));
}

TEST_F(GedTest, CacheRoundTrip) {
  std::vector<DistancePair> pairs = {
      MakeDistancePair(GraphHash{"bb"}, GraphHash{"aa"}, GedValue{0.25, true, 0.25, 10}),
      MakeDistancePair(GraphHash{"aa"}, GraphHash{"cc"}, GedValue{0.5, false, 0.75, 10})};
  EXPECT_EQ(pairs[0].hash1.hex, "aa");
  EXPECT_EQ(pairs[0].hash2.hex, "bb");
  EXPECT_DOUBLE_EQ(pairs[1].Target(), 0.75);
  EXPECT_DOUBLE_EQ(pairs[0].Target(), 0.25);
  std::stringstream ss;
  WriteGedCache(ss, pairs);
  const auto back = ReadGedCache(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].hash2.hex, "cc");
  EXPECT_FALSE(back[1].exact);
  EXPECT_DOUBLE_EQ(back[1].upper, 0.75);
  std::stringstream legacy(R"({"hash1":"aa","hash2":"bb","ged":0.5,"exact":true})");
  EXPECT_DOUBLE_EQ(ReadGedCache(legacy)[0].upper, 0.5);
  std::stringstream bad("{\"hash1\": 1}\n");
  EXPECT_THROW(ReadGedCache(bad), FormatError);
}

TEST_F(GedTest, PairSampling) {
  const auto cards = EnumerateCards(config_, HierarchyLevel::FromIndex(1));
  std::vector<ModelCard> subset(cards.begin(), cards.begin() + 300);
  const auto lib = BuildLibrary(subset);
  PairSamplingOptions opt;
  opt.pair_budget = 5000;
  opt.seed = 3;
  const auto pairs = SamplePairs(lib, cost_, opt);
  EXPECT_LE(pairs.size(), 5000u);
  std::set<std::pair<std::size_t, std::size_t>> unique(pairs.begin(), pairs.end());
  EXPECT_EQ(unique.size(), pairs.size());
  std::vector<bool> covered(lib.size(), false);
  for (const auto& [i, j] : pairs) {
    ASSERT_LT(i, j);
    covered[i] = covered[j] = true;
  }
  for (bool c : covered) EXPECT_TRUE(c);
  EXPECT_EQ(SamplePairs(lib, cost_, opt), pairs);

  opt.pair_budget = 1'000'000;
  EXPECT_EQ(SamplePairs(lib, cost_, opt).size(), 300u * 299 / 2);
}

TEST_F(GedTest, ComputeDistancesIsOrderedAndThreadIndependent) {
  const auto lib = BuildLibrary(cards::SeedModels());
  std::vector<std::pair<std::size_t, std::size_t>> idx;
  for (std::size_t i = 0; i < lib.size(); ++i) {
    for (std::size_t j = i + 1; j < lib.size(); ++j) idx.emplace_back(i, j);
  }
  GedOptions opt;
  opt.expansion_budget = 5000;
  const auto one = ComputeDistances(lib, idx, cost_, opt, 1);
  const auto four = ComputeDistances(lib, idx, cost_, opt, 4);
  ASSERT_EQ(one.size(), idx.size());
  for (std::size_t k = 0; k < one.size(); ++k) {
    EXPECT_EQ(one[k].ged, four[k].ged);
    EXPECT_EQ(one[k].exact, four[k].exact);
    EXPECT_LT(one[k].hash1, one[k].hash2);
  }
}

}  // namespace
}  // namespace hetnas
