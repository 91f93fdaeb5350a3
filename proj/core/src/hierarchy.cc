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

#include "hetnas/hierarchy.h"

#include <algorithm>
#include <map>
#include <set>

#include "hetnas/error.h"
#include "hetnas/graph.h"
#include "hetnas/rng.h"

namespace hetnas {

using nlohmann::json;

namespace {

template <typename T>
std::vector<T> Sorted(const std::set<T>& s) {
  return {s.begin(), s.end()};
}

std::vector<std::pair<int, int>> HeadHiddenPairs(const DepthChoices& d) {
  std::vector<std::pair<int, int>> out;
  for (int h : d.hidden) {
    for (int n : d.heads) {
      if (n > 0 && h % n == 0) out.emplace_back(n, h);
    }
  }
  return out;
}

void AllSequences(const std::vector<int>& widths, int length, std::vector<int>& cur,
                  std::set<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == length) {
    out.insert(cur);
    return;
  }
  for (int w : widths) {
    cur.push_back(w);
    AllSequences(widths, length, cur, out);
    cur.pop_back();
  }
}

}  // namespace

std::uint64_t DepthChoices::Count() const {
  return ops.size() * ff.size() * HeadHiddenPairs(*this).size();
}

LayerSpec DepthChoices::Decode(std::uint64_t index) const {
  const auto nh = HeadHiddenPairs(*this);
  if (ops.empty() || ff.empty() || nh.empty() || index >= Count()) {
    throw InvalidArgumentError("layer index outside the depth choices");
  }
  LayerSpec s;
  const auto& op = ops[index % ops.size()];
  index /= ops.size();
  const auto& [n, h] = nh[index % nh.size()];
  index /= nh.size();
  s.op = op.first;
  s.param = op.second;
  s.heads = n;
  s.hidden = h;
  s.ff = ff[index];
  return s;
}

bool DepthChoices::Admits(const LayerSpec& layer) const {
  return std::find(ops.begin(), ops.end(), std::make_pair(layer.op, layer.param)) != ops.end() &&
         std::find(heads.begin(), heads.end(), layer.heads) != heads.end() &&
         std::find(hidden.begin(), hidden.end(), layer.hidden) != hidden.end() &&
         std::find(ff.begin(), ff.end(), layer.ff) != ff.end() && layer.hidden % layer.heads == 0;
}

ChildSpace ChildSpace::FromParents(const std::vector<ModelCard>& parents,
                                   const HierarchyLevel& child_level) {
  if (parents.empty()) throw InvalidArgumentError("crossover needs at least one parent");
  if (child_level.stack_size != 1) {
    throw InvalidArgumentError("crossover children have one layer per stack");
  }
  std::set<int> lengths;
  int max_len = 0;
  for (const auto& p : parents) {
    const auto problems = StructuralProblems(p);
    if (!problems.empty()) throw InvalidCardError("invalid parent: " + problems.front());
    lengths.insert(p.l);
    max_len = std::max(max_len, p.l);
  }
  ChildSpace space;
  space.level_ = child_level;
  space.lengths_ = Sorted(lengths);
  for (int j = 0; j < max_len; ++j) {
    std::set<std::pair<OpKind, std::string>> ops;
    std::set<int> heads, hidden, widths, depths;
    std::set<std::vector<int>> stacks;
    for (const auto& p : parents) {
      if (p.l <= j) continue;
      ops.emplace(p.o[j], p.p[j]);
      heads.insert(p.n[j]);
      hidden.insert(p.h[j]);
      stacks.insert(p.f[j]);
      widths.insert(p.f[j].begin(), p.f[j].end());
      depths.insert(static_cast<int>(p.f[j].size()));
    }
    DepthChoices d;
    d.ops = Sorted(ops);
    d.heads = Sorted(heads);
    d.hidden = Sorted(hidden);
    if (child_level.hetero_ff) {
      std::set<std::vector<int>> seqs;
      const auto w = Sorted(widths);
      for (int depth : depths) {
        std::vector<int> cur;
        AllSequences(w, depth, cur, seqs);
      }
      d.ff = Sorted(seqs);
    } else {
      d.ff = Sorted(stacks);
    }
    space.depths_.push_back(std::move(d));
  }
  return space;
}

std::uint64_t ChildSpace::Count() const {
  std::uint64_t total = 0;
  for (int l : lengths_) {
    std::uint64_t prod = 1;
    for (int j = 0; j < l; ++j) prod *= depths_[j].Count();
    total += prod;
  }
  return total;
}

ModelCard ChildSpace::CardAt(std::uint64_t index) const {
  for (int l : lengths_) {
    std::uint64_t prod = 1;
    for (int j = 0; j < l; ++j) prod *= depths_[j].Count();
    if (index >= prod) {
      index -= prod;
      continue;
    }
    std::vector<LayerSpec> layers;
    for (int j = 0; j < l; ++j) {
      const std::uint64_t c = depths_[j].Count();
      layers.push_back(depths_[j].Decode(index % c));
      index /= c;
    }
    return ModelCard::FromLayers(layers);
  }
  throw InvalidArgumentError("card index outside the child space");
}

std::vector<ModelCard> ChildSpace::Enumerate(std::uint64_t cap) const {
  const std::uint64_t n = Count();
  if (n > cap) {
    throw CombinatorialOverflowError("child space of " + std::to_string(n) +
                                     " cards exceeds the cap of " + std::to_string(cap));
  }
  std::vector<ModelCard> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(CardAt(i));
  return out;
}

bool ChildSpace::Contains(const ModelCard& card) const {
  if (!std::binary_search(lengths_.begin(), lengths_.end(), card.l)) return false;
  for (int j = 0; j < card.l; ++j) {
    if (!depths_[j].Admits(card.Layer(j))) return false;
  }
  return true;
}

json ChildSpace::Summary() const {
  json depths = json::array();
  for (const auto& d : depths_) {
    json ops = json::array();
    for (const auto& [op, param] : d.ops) ops.push_back(std::string(OpKindName(op)) + "-" + param);
    depths.push_back({{"ops", ops},
                      {"heads", d.heads},
                      {"hidden", d.hidden},
                      {"ff", d.ff},
                      {"count", d.Count()}});
  }
  return {{"level", level_.index},
          {"stack_size", level_.stack_size},
          {"hetero_ff", level_.hetero_ff},
          {"lengths", lengths_},
          {"depths", depths},
          {"count", Count()}};
}

json CrossoverOptions::ToJson() const {
  return {{"top_m", top_m},
          {"neighbors", neighbors},
          {"max_child_cards", max_child_cards},
          {"seed", seed}};
}

CrossoverOptions CrossoverOptions::FromJson(const json& j) {
  CrossoverOptions o;
  o.top_m = j.value("top_m", o.top_m);
  o.neighbors = j.value("neighbors", o.neighbors);
  o.max_child_cards = j.value("max_child_cards", o.max_child_cards);
  o.seed = j.value("seed", o.seed);
  if (o.top_m < 1) throw FormatError("top_m must be positive");
  return o;
}

json LevelTransition::Manifest() const {
  json parent_cards = json::array();
  for (const auto& p : parents) parent_cards.push_back(CardToJson(p));
  return {{"level", child_level.index},
          {"parent_cards", parent_cards},
          {"child_space_summary",
           {{"stack_size", child_level.stack_size},
            {"hetero_ff", child_level.hetero_ff},
            {"union_bound", union_bound},
            {"subsampled", subsampled},
            {"pairs", pair_summaries}}},
          {"child_count", children.size()}};
}

LevelTransition Crossover(const std::vector<ModelCard>& best,
                          const std::vector<std::vector<ModelCard>>& neighbors,
                          const HierarchyLevel& child_level, const CrossoverOptions& options) {
  if (best.empty()) throw InvalidArgumentError("crossover needs at least one best model");
  if (neighbors.size() != best.size()) {
    throw InvalidArgumentError("one neighbor list is needed per best model");
  }
  LevelTransition t;
  t.child_level = child_level;
  std::set<std::string> seen_parents;
  auto add_parent = [&](const ModelCard& c) {
    if (seen_parents.insert(CanonicalString(c)).second) t.parents.push_back(c);
  };
  std::vector<ChildSpace> spaces;
  for (std::size_t i = 0; i < best.size(); ++i) {
    add_parent(best[i]);
    if (neighbors[i].empty()) {
      spaces.push_back(ChildSpace::FromParents({best[i]}, child_level));
    }
    for (const auto& n : neighbors[i]) {
      add_parent(n);
      spaces.push_back(ChildSpace::FromParents({best[i], n}, child_level));
    }
  }
  std::vector<std::uint64_t> counts;
  for (const auto& s : spaces) {
    counts.push_back(s.Count());
    t.union_bound += counts.back();
    t.pair_summaries.push_back(s.Summary());
  }

  std::map<std::string, ModelCard> by_hash;
  auto add = [&](const ModelCard& c) { by_hash.emplace(HashCard(c).hex, c); };
  const std::size_t cap = std::max(options.max_child_cards, t.parents.size());
  if (t.union_bound <= cap) {
    for (const auto& s : spaces) {
      for (std::uint64_t i = 0; i < s.Count(); ++i) add(s.CardAt(i));
    }
  } else {
    t.subsampled = true;
    for (const auto& p : t.parents) add(p);
    Rng rng(MixSeed(options.seed, StringSeed("crossover")));
    const std::size_t max_draws = 20 * cap + 1000;
    for (std::size_t draw = 0; draw < max_draws && by_hash.size() < cap; ++draw) {
      std::uint64_t r = rng.Below(t.union_bound);
      std::size_t k = 0;
      while (r >= counts[k]) r -= counts[k++];
      add(spaces[k].CardAt(r));
    }
  }
  for (auto& [hash, card] : by_hash) t.children.push_back(std::move(card));
  std::sort(t.children.begin(), t.children.end(), [](const ModelCard& a, const ModelCard& b) {
    return CanonicalString(a) < CanonicalString(b);
  });
  return t;
}

}  // namespace hetnas
