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

#ifndef HETNAS_HIERARCHY_H_
#define HETNAS_HIERARCHY_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hetnas/design_space.h"
#include "json.hpp"

namespace hetnas {

// Allowed values at one encoder depth of a crossover child space.
struct DepthChoices {
  std::vector<std::pair<OpKind, std::string>> ops;  // (operation, parameter)
  std::vector<int> heads;
  std::vector<int> hidden;
  std::vector<std::vector<int>> ff;  // whole feed-forward stacks

  // Number of layer configurations, skipping head counts that do not
  // divide the hidden size.
  std::uint64_t Count() const;
  LayerSpec Decode(std::uint64_t index) const;
  bool Admits(const LayerSpec& layer) const;
};

// Cards whose layer at each depth j combines values found at depth j in any
// parent that has that depth. Children take the lengths of the parents.
// Without hetero_ff the feed-forward stacks are the parents' stacks; with it
// they are every sequence over the parents' widths whose length is one of the
// parents' stack depths. Child levels have one layer per stack.
class ChildSpace {
 public:
  // Throws InvalidArgumentError for no parents or a child stack size other
  // than 1, InvalidCardError for structurally invalid parents.
  static ChildSpace FromParents(const std::vector<ModelCard>& parents,
                                const HierarchyLevel& child_level);

  const HierarchyLevel& level() const { return level_; }
  const std::vector<int>& lengths() const { return lengths_; }
  const std::vector<DepthChoices>& depths() const { return depths_; }

  // Closed form: sum over lengths l of the product of Count() for j < l.
  std::uint64_t Count() const;
  // Mixed-radix decoding: lengths in ascending order, depth 0 fastest.
  ModelCard CardAt(std::uint64_t index) const;
  std::vector<ModelCard> Enumerate(std::uint64_t cap = kDefaultEnumerationCap) const;
  bool Contains(const ModelCard& card) const;

  nlohmann::json Summary() const;

 private:
  HierarchyLevel level_;
  std::vector<int> lengths_;
  std::vector<DepthChoices> depths_;
};

struct CrossoverOptions {
  std::size_t top_m = 5;
  std::size_t neighbors = 10;
  // Upper bound on the child library; larger unions are subsampled.
  std::size_t max_child_cards = 2000;
  std::uint64_t seed = 0;

  nlohmann::json ToJson() const;
  static CrossoverOptions FromJson(const nlohmann::json& j);
};

struct LevelTransition {
  HierarchyLevel child_level;
  std::vector<ModelCard> parents;  // best models first, then their neighbors
  std::vector<ModelCard> children;  // canonical order, parents included
  std::uint64_t union_bound = 0;    // sum of the pair space sizes
  bool subsampled = false;
  std::vector<nlohmann::json> pair_summaries;

  // {level, parent_cards, child_space_summary, child_count}
  nlohmann::json Manifest() const;
};

// Pairwise crossover of each best model with each of its neighbors. When the
// union of the pair spaces exceeds max_child_cards, the parents are kept and
// the remainder is filled by seeded draws from the pair spaces, weighted by
// their sizes.
LevelTransition Crossover(const std::vector<ModelCard>& best,
                          const std::vector<std::vector<ModelCard>>& neighbors,
                          const HierarchyLevel& child_level, const CrossoverOptions& options);

}  // namespace hetnas

#endif  // HETNAS_HIERARCHY_H_
