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

#ifndef HETNAS_GED_H_
#define HETNAS_GED_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hetnas/graph.h"

namespace hetnas {

// Coarse complexity class used as the primary ranking key: input/output and
// add-norm < projections < feed-forward < LT heads < DSC heads < SA heads.
int ComplexityTier(const ComputeBlock& block);

// FLOP proxy of one block at sequence length `seq_len`. Within a tier it
// orders blocks by width, kernel size and hidden size.
double FlopProxy(const ComputeBlock& block, int seq_len);

// Blocks sorted by (tier, FLOP proxy, variant, label), ascending. The variant
// key puts SDP before WMA and DFT before DCT.
std::vector<ComputeBlock> ComplexityRank(const std::vector<ComputeBlock>& catalog,
                                         int ref_seq_len = 128);

// Edit costs derived from a complexity ranking over B blocks. Costs are kept
// as integers in units of 1/(2B): insertion/deletion of the block at rank i
// is 2(i+1) units, substitution between ranks i and j is 2|i-j| units, and an
// inserted or deleted edge is 1 unit (0.5/B).
class CostModel {
 public:
  explicit CostModel(const std::vector<ComputeBlock>& ranked_blocks);
  static CostModel ForConfig(const DesignSpaceConfig& config, int ref_seq_len = 128);

  int size() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& ranked_labels() const { return labels_; }
  int RankOf(const std::string& label) const;

  int InsertionUnits(int rank) const { return 2 * (rank + 1); }
  int DeletionUnits(int rank) const { return 2 * (rank + 1); }
  int SubstitutionUnits(int a, int b) const { return 2 * (a > b ? a - b : b - a); }
  static constexpr int kEdgeUnits = 1;

  double UnitValue() const { return 1.0 / (2.0 * size()); }
  double Insertion(int rank) const { return InsertionUnits(rank) * UnitValue(); }
  double Deletion(int rank) const { return DeletionUnits(rank) * UnitValue(); }
  double Substitution(int a, int b) const { return SubstitutionUnits(a, b) * UnitValue(); }
  double EdgeCost() const { return kEdgeUnits * UnitValue(); }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> rank_;
};

struct GedValue {
  // Exact distance, or an admissible lower bound when `exact` is false.
  double value = 0.0;
  bool exact = true;
  // Cost of the best edit path found (equals `value` when exact).
  double upper = 0.0;
  std::uint64_t expansions = 0;
};

struct GedOptions {
  // Graphs above this many nodes get the flagged root lower bound.
  int node_budget = 64;
  // Search nodes expanded before giving up on exactness.
  std::uint64_t expansion_budget = 20'000'000;
};

// Exact graph edit distance by depth-first branch and bound over node
// mappings, pruned with a label-multiset assignment bound plus an edge-count
// bound. Twin blocks (same label and neighbourhood, e.g. the heads of one
// layer) are mapped in index order only. Deterministic and symmetric.
GedValue Ged(const ComputationalGraph& g1, const ComputationalGraph& g2,
             const CostModel& cost, const GedOptions& options = {});

// The admissible bound used at the search root.
double GedLowerBound(const ComputationalGraph& g1, const ComputationalGraph& g2,
                     const CostModel& cost);

// Cost of a complete edit path given by a node mapping (`mapping[u]` is the
// g2 node of g1 node u, or -1 for deletion). Used by tests and diagnostics.
double EditPathCost(const ComputationalGraph& g1, const ComputationalGraph& g2,
                    const CostModel& cost, const std::vector<int>& mapping);

// One GED record; hash1 < hash2 lexicographically.
struct DistancePair {
  GraphHash hash1;
  GraphHash hash2;
  double ged = 0.0;
  bool exact = true;
  // Best edit-path cost found; equals `ged` for exact records.
  double upper = 0.0;

  // Value used as a regression target: the exact distance when known,
  // otherwise the cost of the best edit path found.
  double Target() const { return exact ? ged : upper; }
};

DistancePair MakeDistancePair(GraphHash a, GraphHash b, const GedValue& value);

// Cache file: JSONL records {hash1, hash2, ged, exact, upper}; `upper` is
// optional on input and defaults to `ged`.
void WriteGedCache(std::ostream& out, const std::vector<DistancePair>& pairs);
std::vector<DistancePair> ReadGedCache(std::istream& in);

struct PairSamplingOptions {
  std::size_t pair_budget = 500'000;
  // Random partners per graph, so every graph appears in the pair set.
  int partners_per_graph = 4;
  // Size of each anchor's candidate set (all pairs inside it are taken).
  int anchor_set_size = 24;
  std::uint64_t seed = 0;
};

// Library index pairs (i < j), no duplicates, deterministic given the seed.
// Returns every pair when C(S,2) fits in the budget; otherwise a coverage
// pass pairs each graph with random partners and the rest of the budget goes
// to anchor neighbourhoods (the anchor's nearest graphs under the root lower
// bound).
std::vector<std::pair<std::size_t, std::size_t>> SamplePairs(
    const GraphLibrary& library, const CostModel& cost,
    const PairSamplingOptions& options);

// Expansion budget used for library-scale pair sets. Pairs that exhaust it
// keep the flagged lower bound and the best path found as `upper`.
inline constexpr std::uint64_t kLibraryExpansionBudget = 50'000;

// Computes GED for each index pair with up to `workers` threads; output order
// matches `pairs`.
std::vector<DistancePair> ComputeDistances(
    const GraphLibrary& library,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
    const CostModel& cost, const GedOptions& options = {}, int workers = 1);

}  // namespace hetnas

#endif  // HETNAS_GED_H_
