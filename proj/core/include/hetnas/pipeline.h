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

#ifndef HETNAS_PIPELINE_H_
#define HETNAS_PIPELINE_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "hetnas/boshnas.h"
#include "hetnas/design_space.h"
#include "hetnas/embedder.h"
#include "hetnas/evaluator.h"
#include "hetnas/ged.h"
#include "hetnas/graph.h"
#include "hetnas/hierarchy.h"
#include "json.hpp"

namespace hetnas {

struct PipelineConfig {
  DesignSpaceConfig space = DesignSpaceConfig::Standard();
  PairSamplingOptions pairs;
  GedOptions ged{64, kLibraryExpansionBudget};
  int embedding_dim = kDefaultEmbeddingDim;
  EmbeddingOptions embedding;
  SearchConfig search;
  OracleSpec oracle;
  CrossoverOptions crossover;
  int workers = 1;
  int first_level = 1;
  int last_level = 3;

  nlohmann::json ToJson() const;
  static PipelineConfig FromJson(const nlohmann::json& j);
};

// Graph library, GED pairs and embeddings of one level.
struct LevelArtifacts {
  HierarchyLevel level;
  GraphLibrary library;
  std::vector<DistancePair> pairs;
  EmbeddingResult embedding;
};

LevelArtifacts PrepareLevel(const std::vector<ModelCard>& cards, const HierarchyLevel& level,
                            const PipelineConfig& config, std::uint64_t seed);

// Cards of the m best successful ledger entries (score descending, then
// hash).
std::vector<ModelCard> TopCards(const SearchResult& result, const GraphLibrary& library,
                                std::size_t m);

struct LevelRun {
  LevelArtifacts artifacts;
  SearchResult search;
  std::vector<ModelCard> top;
  std::vector<std::vector<ModelCard>> neighbors;
  std::optional<LevelTransition> transition;  // derivation of the next level
};

using LevelCallback = std::function<void(const LevelRun&)>;

// Enumerates the first level, then alternates search and crossover until
// `last_level`. Each level after the first is seeded with the previous
// level's best models. The callback sees every finished level.
std::vector<LevelRun> RunHierarchy(const PipelineConfig& config, Oracle& oracle,
                                   const std::vector<ModelCard>& seeds,
                                   const LevelCallback& on_level = {});

}  // namespace hetnas

#endif  // HETNAS_PIPELINE_H_
