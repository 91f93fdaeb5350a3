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

#ifndef HETNAS_GRAPH_H_
#define HETNAS_GRAPH_H_

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hetnas/design_space.h"
#include "json.hpp"

namespace hetnas {

enum class BlockKind { kInput, kOutput, kAttentionHead, kFeedForward, kAddNorm, kProjection };

std::string_view BlockKindName(BlockKind kind);
BlockKind ParseBlockKind(std::string_view name);

// One node of a block-level computational graph. The label is a pure
// function of the kind and its attributes.
struct ComputeBlock {
  BlockKind kind = BlockKind::kInput;
  int hidden = 0;        // attention heads
  OpKind op = OpKind::kSA;
  std::string param;
  int width = 0;         // feed-forward layers
  int from_dim = 0;      // projections
  int to_dim = 0;

  static ComputeBlock Input();
  static ComputeBlock Output();
  static ComputeBlock AddNorm();
  static ComputeBlock Head(int hidden, OpKind op, std::string param);
  static ComputeBlock FeedForward(int width);
  static ComputeBlock Projection(int from_dim, int to_dim);

  // "h-128/SA-SDP", "ff-512", "add-norm", "proj-id", "proj-128-256", ...
  std::string Label() const;
  nlohmann::json Attrs() const;

  bool operator==(const ComputeBlock&) const = default;
};

nlohmann::json BlockToJson(const ComputeBlock& block);
ComputeBlock BlockFromJson(const nlohmann::json& j);

struct ComputationalGraph {
  std::vector<ComputeBlock> nodes;
  std::vector<std::pair<int, int>> edges;
  int source = 0;
  int sink = 0;

  std::size_t size() const { return nodes.size(); }

  // DAG, single source (input) and sink (output), every node on a
  // source-to-sink path. Empty iff valid.
  std::vector<std::string> Problems() const;

  // Kahn order with ties broken by node index. Throws CyclicGraphError.
  std::vector<int> TopologicalOrder() const;

  // Graph with node i moved to position perm[i].
  ComputationalGraph Permuted(const std::vector<int>& perm) const;
};

nlohmann::json GraphToJson(const ComputationalGraph& g);
ComputationalGraph GraphFromJson(const nlohmann::json& j);

// 64-character lowercase hex SHA-256 identity of a graph.
struct GraphHash {
  std::string hex;

  bool operator==(const GraphHash&) const = default;
  auto operator<=>(const GraphHash&) const = default;
};

struct GraphHashHasher {
  std::size_t operator()(const GraphHash& h) const {
    return std::hash<std::string>{}(h.hex);
  }
};

// Per encoder layer: heads fed from the previous stage into one add-norm,
// the feed-forward layers in series, a second add-norm, then a projection to
// the next layer's hidden size (identity when sizes match or at the last
// layer). Throws InvalidCardError for structurally broken cards.
ComputationalGraph CardToGraph(const ModelCard& card);

// Recursive order-invariant hash. In topological order each node hashes
//   sorted(pred node hashes) || sha(label) || sorted(sha(succ labels));
// the graph hash is the SHA-256 of the sorted node hashes.
GraphHash HashGraph(const ComputationalGraph& g);

inline GraphHash HashCard(const ModelCard& card) { return HashGraph(CardToGraph(card)); }

// Every block label realizable in the space, in label order.
std::vector<ComputeBlock> BlockCatalog(const DesignSpaceConfig& config);

// Hash-deduplicated graph library. The first occurrence of a hash wins.
class GraphLibrary {
 public:
  struct Entry {
    GraphHash hash;
    ModelCard card;
    ComputationalGraph graph;
  };

  // Returns false (and counts a collision) when the hash is already present.
  bool Insert(ModelCard card, ComputationalGraph graph);
  bool Insert(ModelCard card);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t collisions() const { return collisions_; }

  const std::vector<Entry>& entries() const { return entries_; }
  const Entry& at(std::size_t i) const { return entries_.at(i); }
  const Entry& Find(const GraphHash& hash) const;
  bool Contains(const GraphHash& hash) const { return index_.contains(hash); }
  std::size_t IndexOf(const GraphHash& hash) const;
  std::vector<GraphHash> Hashes() const;

  // JSONL, one {hash, card, nodes, edges} record per line.
  void WriteJsonl(std::ostream& out) const;
  static GraphLibrary ReadJsonl(std::istream& in);

 private:
  std::vector<Entry> entries_;
  std::unordered_map<GraphHash, std::size_t, GraphHashHasher> index_;
  std::size_t collisions_ = 0;
};

GraphLibrary BuildLibrary(const std::vector<ModelCard>& cards);

}  // namespace hetnas

#endif  // HETNAS_GRAPH_H_
