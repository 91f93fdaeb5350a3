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

#include "hetnas/design_space.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "hetnas/error.h"
#include "hetnas/graph.h"

namespace hetnas {
namespace {

std::vector<LayerSpec> Stacks(const ModelCard& card, int s) {
  std::vector<LayerSpec> out;
  for (int j = 0; j < card.l; j += s) out.push_back(card.Layer(j));
  return out;
}

TEST(DesignSpace, StandardSpaceIsValid) {
  const auto config = DesignSpaceConfig::Standard();
  EXPECT_TRUE(config.Problems().empty());
  EXPECT_NO_THROW(config.CheckValid());
  EXPECT_EQ(config.stack_size, 2);
  EXPECT_FALSE(config.hetero_ff);
}

TEST(DesignSpace, ConfigRoundTripsThroughJson) {
  const auto config = DesignSpaceConfig::Standard();
  const auto back = DesignSpaceConfig::FromJson(config.ToJson());
  EXPECT_EQ(back.ToJson(), config.ToJson());
  std::ifstream in(std::string(HETNAS_DATA_DIR) + "/standard_space.json");
  ASSERT_TRUE(in.good());
  EXPECT_EQ(DesignSpaceConfig::FromJson(nlohmann::json::parse(in)).ToJson(), config.ToJson());
}

TEST(DesignSpace, ConfigProblemsAreReported) {
  auto config = DesignSpaceConfig::Standard();
  config.heads = {3};
  EXPECT_FALSE(config.Problems().empty());
  EXPECT_THROW(config.CheckValid(), InvalidArgumentError);

  config = DesignSpaceConfig::Standard();
  config.layer_counts = {3};  // not a multiple of the stack size
  EXPECT_FALSE(config.Problems().empty());

  config = DesignSpaceConfig::Standard();
  config.layer_counts.clear();
  EXPECT_FALSE(config.Problems().empty());

  EXPECT_THROW(DesignSpaceConfig::FromJson(nlohmann::json::parse(R"({"ops": 3})")), FormatError);
}

TEST(DesignSpace, ClosedFormCounts) {
  const auto config = DesignSpaceConfig::Standard();
  // Per stack: 6 op variants x 4 (heads, hidden) x 4 ff stacks.
  EXPECT_EQ(CountCards(config, HierarchyLevel::FromIndex(1)), 96u + 96u * 96u);
  EXPECT_EQ(CountCards(config, HierarchyLevel::FromIndex(2)),
            96ull * 96 + 96ull * 96 * 96 * 96);
  // Heterogeneous stacks: 2 + 2^3 feed-forward choices per layer.
  EXPECT_EQ(CountCards(config, HierarchyLevel::FromIndex(3)), 3'317'817'600ull);
}

TEST(DesignSpace, LayerSpecs) {
  const auto config = DesignSpaceConfig::Standard();
  EXPECT_EQ(EnumerateLayerSpecs(config, false).size(), 96u);
  const auto hetero = EnumerateLayerSpecs(config, true);
  EXPECT_EQ(hetero.size(), 240u);
  std::set<LayerSpec> unique(hetero.begin(), hetero.end());
  EXPECT_EQ(unique.size(), hetero.size());
}

TEST(DesignSpace, LevelOneEnumeration) {
  const auto config = DesignSpaceConfig::Standard();
  const auto cards = EnumerateCards(config, HierarchyLevel::FromIndex(1));
  ASSERT_EQ(cards.size(), 9312u);
  for (std::size_t i = 1; i < cards.size(); ++i) {
    ASSERT_LT(CanonicalString(cards[i - 1]), CanonicalString(cards[i]));
  }
  for (const auto& c : cards) ASSERT_TRUE(ValidateCard(c, config).empty());
  const auto library = BuildLibrary(cards);
  EXPECT_EQ(library.size(), 9312u);
  EXPECT_EQ(library.collisions(), 0u);
}

TEST(DesignSpace, EnumerationCap) {
  const auto config = DesignSpaceConfig::Standard();
  EXPECT_THROW(EnumerateCards(config, HierarchyLevel::FromIndex(2)), CombinatorialOverflowError);
  EXPECT_THROW(EnumerateCards(config, HierarchyLevel::FromIndex(1), 100),
               CombinatorialOverflowError);
}

TEST(DesignSpace, SmallSpaceEnumerationMatchesCount) {
  auto config = DesignSpaceConfig::Standard();
  config.layer_counts = {2};
  config.ops = {OpKind::kLT};
  config.op_params = {{OpKind::kLT, {"DFT", "DCT"}}};
  config.heads = {2};
  for (int level = 1; level <= 3; ++level) {
    const auto lv = HierarchyLevel::FromIndex(level);
    const auto cards = EnumerateCards(config, lv);
    EXPECT_EQ(cards.size(), CountCards(config, lv)) << level;
    const auto at = config.AtLevel(lv);
    for (const auto& c : cards) ASSERT_TRUE(ValidateCard(c, at).empty());
  }
}

TEST(DesignSpace, Levels) {
  const auto l1 = HierarchyLevel::FromIndex(1);
  EXPECT_EQ(l1.stack_size, 2);
  EXPECT_FALSE(l1.hetero_ff);
  const auto l2 = NextLevel(l1);
  EXPECT_EQ(l2, HierarchyLevel::FromIndex(2));
  EXPECT_EQ(l2.stack_size, 1);
  EXPECT_FALSE(l2.hetero_ff);
  const auto l3 = NextLevel(l2);
  EXPECT_EQ(l3.stack_size, 1);
  EXPECT_TRUE(l3.hetero_ff);
  EXPECT_THROW(NextLevel(l3), InvalidArgumentError);
  EXPECT_THROW(HierarchyLevel::FromIndex(0), InvalidArgumentError);
  EXPECT_THROW(HierarchyLevel::FromIndex(4), InvalidArgumentError);
}

TEST(DesignSpace, ValidateCardFindsEachViolation) {
  const auto config = DesignSpaceConfig::Standard();
  const ModelCard good = cards::BertMini();
  EXPECT_TRUE(ValidateCard(good, config).empty());

  auto bad = good;
  bad.n[0] = 3;  // not allowed and does not divide 256
  EXPECT_FALSE(ValidateCard(bad, config).empty());
  bad = good;
  bad.p[0] = "DCT";  // SA with an LT parameter
  EXPECT_FALSE(ValidateCard(bad, config).empty());
  EXPECT_FALSE(StructuralProblems(bad).empty());
  bad = good;
  bad.l = 3;
  EXPECT_FALSE(ValidateCard(bad, config).empty());
  bad = good;
  bad.f[1] = {1024, 512, 1024};  // heterogeneous stack at level 1
  EXPECT_FALSE(ValidateCard(bad, config).empty());
  EXPECT_TRUE(ValidateCard(bad, config.AtLevel(HierarchyLevel::FromIndex(3))).empty());
  bad = good;
  bad.h[1] = 128;  // breaks the stack of two identical layers
  EXPECT_FALSE(ValidateCard(bad, config).empty());
  EXPECT_TRUE(ValidateCard(bad, config.AtLevel(HierarchyLevel::FromIndex(2))).empty());
  bad = good;
  bad.o.pop_back();
  EXPECT_FALSE(StructuralProblems(bad).empty());
  EXPECT_THROW(CardToGraph(bad), InvalidCardError);
}

TEST(DesignSpace, CardJsonRoundTrip) {
  for (const auto& c : cards::SeedModels()) {
    const auto j = CardToJson(c);
    EXPECT_EQ(CardFromJson(j), c);
  }
  // Kernel sizes serialize as integers.
  const auto j = nlohmann::json::parse(R"({"l":2,"o":["DSC","DSC"],"n":[2,2],"h":[128,128],
      "f":[[512],[512]],"p":[9,9]})");
  const ModelCard c = CardFromJson(j);
  EXPECT_EQ(c.p[0], "9");
  EXPECT_EQ(CardToJson(c)["p"][0], 9);
  EXPECT_THROW(CardFromJson(nlohmann::json::parse(R"({"l":2})")), FormatError);
  EXPECT_THROW(CardFromJson(nlohmann::json::parse(
                   R"({"l":1,"o":["XX"],"n":[2],"h":[128],"f":[[512]],"p":["SDP"]})")),
               FormatError);
}

TEST(DesignSpace, CanonicalStringIsSortedKeyJson) {
  EXPECT_EQ(CanonicalString(cards::BertTiny()),
            R"({"f":[[512],[512]],"h":[128,128],"l":2,"n":[2,2],"o":["SA","SA"],)"
            R"("p":["SDP","SDP"]})");
}

TEST(DesignSpace, ExpandStacks) {
  const ModelCard mini = cards::BertMini();
  EXPECT_EQ(ExpandStacks(Stacks(mini, 2), 2), mini);
  EXPECT_EQ(ExpandStacks(Stacks(mini, 1), 1), mini);
}

TEST(DesignSpace, FixtureCardsMatchDataFiles) {
  const std::pair<const char*, ModelCard> fixtures[] = {
      {"bert-tiny", cards::BertTiny()},
      {"bert-mini", cards::BertMini()},
      {"flexi-mini-s2", cards::FlexiMiniLevel1Best()},
      {"flexi-mini", cards::FlexiMini()},
      {"ablation-no-second-order", cards::AblationNoSecondOrder()},
      {"ablation-no-heteroscedastic", cards::AblationNoHeteroscedastic()},
  };
  for (const auto& [name, card] : fixtures) {
    std::ifstream in(std::string(HETNAS_DATA_DIR) + "/cards/" + name + ".json");
    ASSERT_TRUE(in.good()) << name;
    EXPECT_EQ(CardFromJson(nlohmann::json::parse(in)), card) << name;
    EXPECT_TRUE(StructuralProblems(card).empty()) << name;
  }
  // The searched level-1 best lies in the level-1 space, the final one in s=1.
  const auto config = DesignSpaceConfig::Standard();
  EXPECT_TRUE(ValidateCard(cards::FlexiMiniLevel1Best(), config).empty());
  EXPECT_TRUE(
      ValidateCard(cards::FlexiMini(), config.AtLevel(HierarchyLevel::FromIndex(2))).empty());
}

TEST(DesignSpace, SeedModels) {
  const auto seeds = cards::SeedModels();
  ASSERT_EQ(seeds.size(), 12u);
  const auto config = DesignSpaceConfig::Standard();
  std::set<std::string> unique;
  for (const auto& c : seeds) {
    EXPECT_TRUE(ValidateCard(c, config).empty()) << CanonicalString(c);
    unique.insert(CanonicalString(c));
    EXPECT_EQ(std::count(c.o.begin(), c.o.end(), c.o[0]), c.l);
  }
  EXPECT_EQ(unique.size(), 12u);
  EXPECT_EQ(seeds[0], cards::BertTiny());
  EXPECT_EQ(seeds[3], cards::BertMini());
}

}  // namespace
}  // namespace hetnas
