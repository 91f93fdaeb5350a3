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

#include <algorithm>

#include "hetnas/error.h"
#include "hetnas/rng.h"

namespace hetnas {

using nlohmann::json;

namespace {

json PairOptionsToJson(const PairSamplingOptions& o) {
  return {{"pair_budget", o.pair_budget},
          {"partners_per_graph", o.partners_per_graph},
          {"anchor_set_size", o.anchor_set_size},
          {"seed", o.seed}};
}

PairSamplingOptions PairOptionsFromJson(const json& j) {
  PairSamplingOptions o;
  o.pair_budget = j.value("pair_budget", o.pair_budget);
  o.partners_per_graph = j.value("partners_per_graph", o.partners_per_graph);
  o.anchor_set_size = j.value("anchor_set_size", o.anchor_set_size);
  o.seed = j.value("seed", o.seed);
  return o;
}

json EmbeddingOptionsToJson(const EmbeddingOptions& o) {
  return {{"epochs", o.epochs},
          {"batch_size", o.batch_size},
          {"learning_rate", o.learning_rate},
          {"final_lr_fraction", o.final_lr_fraction},
          {"init_range", o.init_range},
          {"normalize", o.normalize}};
}

EmbeddingOptions EmbeddingOptionsFromJson(const json& j) {
  EmbeddingOptions o;
  o.epochs = j.value("epochs", o.epochs);
  o.batch_size = j.value("batch_size", o.batch_size);
  o.learning_rate = j.value("learning_rate", o.learning_rate);
  o.final_lr_fraction = j.value("final_lr_fraction", o.final_lr_fraction);
  o.init_range = j.value("init_range", o.init_range);
  o.normalize = j.value("normalize", o.normalize);
  return o;
}

}  // namespace

json PipelineConfig::ToJson() const {
  return {{"space", space.ToJson()},
          {"pairs", PairOptionsToJson(pairs)},
          {"ged", {{"node_budget", ged.node_budget}, {"expansion_budget", ged.expansion_budget}}},
          {"embedding_dim", embedding_dim},
          {"embedding", EmbeddingOptionsToJson(embedding)},
          {"search", search.ToJson()},
          {"oracle", oracle.ToJson()},
          {"crossover", crossover.ToJson()},
          {"workers", workers},
          {"first_level", first_level},
          {"last_level", last_level}};
}

PipelineConfig PipelineConfig::FromJson(const json& j) {
  try {
    PipelineConfig c;
    if (j.contains("space")) c.space = DesignSpaceConfig::FromJson(j.at("space"));
    if (j.contains("pairs")) c.pairs = PairOptionsFromJson(j.at("pairs"));
    if (j.contains("ged")) {
      c.ged.node_budget = j.at("ged").value("node_budget", c.ged.node_budget);
      c.ged.expansion_budget = j.at("ged").value("expansion_budget", c.ged.expansion_budget);
    }
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    if (j.contains("embedding")) c.embedding = EmbeddingOptionsFromJson(j.at("embedding"));
    if (j.contains("search")) c.search = SearchConfig::FromJson(j.at("search"));
    if (j.contains("oracle")) c.oracle = OracleSpec::FromJson(j.at("oracle"));
    if (j.contains("crossover")) c.crossover = CrossoverOptions::FromJson(j.at("crossover"));
    c.workers = j.value("workers", c.workers);
    c.first_level = j.value("first_level", c.first_level);
    c.last_level = j.value("last_level", c.last_level);
    if (c.first_level < 1 || c.last_level > 3 || c.first_level > c.last_level) {
      throw FormatError("levels must satisfy 1 <= first_level <= last_level <= 3");
    }
    if (c.embedding_dim < 1) throw FormatError("embedding_dim must be positive");
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed pipeline config: ") + e.what());
  }
}

LevelArtifacts PrepareLevel(const std::vector<ModelCard>& cards, const HierarchyLevel& level,
                            const PipelineConfig& config, std::uint64_t seed) {
  LevelArtifacts a;
  a.level = level;
  a.library = BuildLibrary(cards);
  if (a.library.size() < 2) throw InvalidArgumentError("a level needs at least two graphs");
  const CostModel cost = CostModel::ForConfig(config.space.AtLevel(level));
  PairSamplingOptions pair_options = config.pairs;
  pair_options.seed = MixSeed(seed, StringSeed("pairs"));
  const auto index_pairs = SamplePairs(a.library, cost, pair_options);
  a.pairs = ComputeDistances(a.library, index_pairs, cost, config.ged, config.workers);
  a.embedding = TrainEmbeddings(a.pairs, config.embedding_dim, MixSeed(seed, StringSeed("embed")),
                                config.embedding);
  return a;
}

std::vector<ModelCard> TopCards(const SearchResult& result, const GraphLibrary& library,
                                std::size_t m) {
  std::vector<std::pair<double, GraphHash>> scored;
  for (const auto& e : result.ledger) {
    if (e.score) scored.emplace_back(*e.score, e.hash);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<ModelCard> out;
  for (std::size_t i = 0; i < scored.size() && out.size() < m; ++i) {
    out.push_back(library.Find(scored[i].second).card);
  }
  return out;
}

std::vector<LevelRun> RunHierarchy(const PipelineConfig& config, Oracle& oracle,
                                   const std::vector<ModelCard>& seeds,
                                   const LevelCallback& on_level) {
  std::vector<LevelRun> runs;
  HierarchyLevel level = HierarchyLevel::FromIndex(config.first_level);
  std::vector<ModelCard> cards = EnumerateCards(config.space, level);
  std::vector<ModelCard> level_seeds = seeds;
  while (true) {
    const std::uint64_t level_seed = MixSeed(config.search.seed, level.index);
    LevelRun run;
    run.artifacts = PrepareLevel(cards, level, config, level_seed);
    SearchSpace space{&run.artifacts.library, &run.artifacts.embedding.table,
                      config.space.AtLevel(level), level};
    SearchConfig search_config = config.search;
    search_config.seed = level_seed;
    Search search(space, search_config, oracle);
    run.search = search.Run(level_seeds);
    run.top = TopCards(run.search, run.artifacts.library, config.crossover.top_m);
    for (const auto& card : run.top) {
      std::vector<ModelCard> nbrs;
      const auto& table = run.artifacts.embedding.table;
      const std::size_t k = std::min(config.crossover.neighbors, table.size() - 1);
      for (const auto& nb : Knn(table, HashCard(card), k)) {
        nbrs.push_back(run.artifacts.library.Find(nb.hash).card);
      }
      run.neighbors.push_back(std::move(nbrs));
    }
    const bool last = level.index >= config.last_level || run.top.empty();
    if (!last) {
      CrossoverOptions opts = config.crossover;
      opts.seed = MixSeed(level_seed, StringSeed("crossover"));
      run.transition = Crossover(run.top, run.neighbors, NextLevel(level), opts);
      cards = run.transition->children;
      level_seeds = run.top;
      level = run.transition->child_level;
    }
    if (on_level) on_level(run);
    runs.push_back(std::move(run));
    if (last) break;
  }
  return runs;
}

}  // namespace hetnas
