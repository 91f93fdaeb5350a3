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

#include "hetnas/graph.h"

#include <algorithm>
#include <istream>
#include <ostream>
#include <queue>
#include <set>

#include "hetnas/error.h"
#include "hetnas/sha256.h"

namespace hetnas {
namespace {

using nlohmann::json;

void MarkReachable(int start, const std::vector<std::vector<int>>& adj,
                   std::vector<bool>& seen) {
  std::vector<int> stack = {start};
  seen[start] = true;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
    }
  }
}

}  // namespace

std::string_view BlockKindName(BlockKind kind) {
  switch (kind) {
    case BlockKind::kInput:
      return "input";
    case BlockKind::kOutput:
      return "output";
    case BlockKind::kAttentionHead:
      return "attention-head";
    case BlockKind::kFeedForward:
      return "feed-forward-layer";
    case BlockKind::kAddNorm:
      return "add-norm";
    case BlockKind::kProjection:
      return "projection";
  }
  return "?";
}

BlockKind ParseBlockKind(std::string_view name) {
  for (BlockKind k : {BlockKind::kInput, BlockKind::kOutput, BlockKind::kAttentionHead,
                      BlockKind::kFeedForward, BlockKind::kAddNorm,
                      BlockKind::kProjection}) {
    if (BlockKindName(k) == name) return k;
  }
  throw FormatError("unknown block kind: " + std::string(name));
}

ComputeBlock ComputeBlock::Input() {
  ComputeBlock b;
  b.kind = BlockKind::kInput;
  return b;
}

ComputeBlock ComputeBlock::Output() {
  ComputeBlock b;
  b.kind = BlockKind::kOutput;
  return b;
}

ComputeBlock ComputeBlock::AddNorm() {
  ComputeBlock b;
  b.kind = BlockKind::kAddNorm;
  return b;
}

ComputeBlock ComputeBlock::Head(int hidden, OpKind op, std::string param) {
  ComputeBlock b;
  b.kind = BlockKind::kAttentionHead;
  b.hidden = hidden;
  b.op = op;
  b.param = std::move(param);
  return b;
}

ComputeBlock ComputeBlock::FeedForward(int width) {
  ComputeBlock b;
  b.kind = BlockKind::kFeedForward;
  b.width = width;
  return b;
}

ComputeBlock ComputeBlock::Projection(int from_dim, int to_dim) {
  ComputeBlock b;
  b.kind = BlockKind::kProjection;
  b.from_dim = from_dim;
  b.to_dim = to_dim;
  return b;
}

std::string ComputeBlock::Label() const {
  switch (kind) {
    case BlockKind::kInput:
      return "input";
    case BlockKind::kOutput:
      return "output";
    case BlockKind::kAddNorm:
      return "add-norm";
    case BlockKind::kAttentionHead:
      return "h-" + std::to_string(hidden) + "/" + std::string(OpKindName(op)) +
             "-" + param;
    case BlockKind::kFeedForward:
      return "ff-" + std::to_string(width);
    case BlockKind::kProjection:
      if (from_dim == to_dim) return "proj-id";
      return "proj-" + std::to_string(from_dim) + "-" + std::to_string(to_dim);
  }
  return "?";
}

json ComputeBlock::Attrs() const {
  json a = json::object();
  switch (kind) {
    case BlockKind::kAttentionHead:
      a["hidden"] = hidden;
      a["op"] = std::string(OpKindName(op));
      a["param"] = param;
      break;
    case BlockKind::kFeedForward:
      a["width"] = width;
      break;
    case BlockKind::kProjection:
      a["from"] = from_dim;
      a["to"] = to_dim;
      break;
    default:
      break;
  }
  return a;
}

json BlockToJson(const ComputeBlock& block) {
  return json{{"kind", std::string(BlockKindName(block.kind))},
              {"label", block.Label()},
              {"attrs", block.Attrs()}};
}

ComputeBlock BlockFromJson(const json& j) {
  try {
    ComputeBlock b;
    b.kind = ParseBlockKind(j.at("kind").get<std::string>());
    const json& a = j.contains("attrs") ? j.at("attrs") : json::object();
    switch (b.kind) {
      case BlockKind::kAttentionHead:
        b.hidden = a.at("hidden").get<int>();
        b.op = ParseOpKind(a.at("op").get<std::string>());
        b.param = a.at("param").get<std::string>();
        break;
      case BlockKind::kFeedForward:
        b.width = a.at("width").get<int>();
        break;
      case BlockKind::kProjection:
        b.from_dim = a.at("from").get<int>();
        b.to_dim = a.at("to").get<int>();
        break;
      default:
        break;
    }
    if (j.contains("label") && j.at("label").get<std::string>() != b.Label()) {
      throw FormatError("block label does not match its attributes");
    }
    return b;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed block: ") + e.what());
  }
}

std::vector<std::string> ComputationalGraph::Problems() const {
  std::vector<std::string> out;
  const int n = static_cast<int>(nodes.size());
  if (n == 0) return {"empty graph"};
  if (source < 0 || source >= n || sink < 0 || sink >= n) {
    return {"source/sink index out of range"};
  }
  std::vector<std::vector<int>> fwd(n), bwd(n);
  for (const auto& [a, b] : edges) {
    if (a < 0 || a >= n || b < 0 || b >= n) return {"edge index out of range"};
    fwd[a].push_back(b);
    bwd[b].push_back(a);
  }
  if (nodes[source].kind != BlockKind::kInput) out.push_back("source is not an input block");
  if (nodes[sink].kind != BlockKind::kOutput) out.push_back("sink is not an output block");
  for (int v = 0; v < n; ++v) {
    if (bwd[v].empty() && v != source) out.push_back("extra source node");
    if (fwd[v].empty() && v != sink) out.push_back("extra sink node");
  }
  try {
    (void)TopologicalOrder();
  } catch (const CyclicGraphError&) {
    out.push_back("graph has a cycle");
  }
  std::vector<bool> from_source(n, false), to_sink(n, false);
  MarkReachable(source, fwd, from_source);
  MarkReachable(sink, bwd, to_sink);
  for (int v = 0; v < n; ++v) {
    if (!from_source[v] || !to_sink[v]) {
      out.push_back("node " + std::to_string(v) + " is off every source-sink path");
    }
  }
  return out;
}

std::vector<int> ComputationalGraph::TopologicalOrder() const {
  const int n = static_cast<int>(nodes.size());
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<int>> fwd(n);
  for (const auto& [a, b] : edges) {
    fwd[a].push_back(b);
    ++indeg[b];
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int v = 0; v < n; ++v) {
    if (indeg[v] == 0) ready.push(v);
  }
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    const int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int w : fwd[v]) {
      if (--indeg[w] == 0) ready.push(w);
    }
  }
  if (static_cast<int>(order.size()) != n) throw CyclicGraphError("graph has a cycle");
  return order;
}

ComputationalGraph ComputationalGraph::Permuted(const std::vector<int>& perm) const {
  ComputationalGraph g;
  g.nodes.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) g.nodes[perm[i]] = nodes[i];
  for (const auto& [a, b] : edges) g.edges.emplace_back(perm[a], perm[b]);
  g.source = perm[source];
  g.sink = perm[sink];
  return g;
}

json GraphToJson(const ComputationalGraph& g) {
  json nodes = json::array();
  for (const auto& b : g.nodes) nodes.push_back(BlockToJson(b));
  json edges = json::array();
  for (const auto& [a, b] : g.edges) edges.push_back({a, b});
  return json{{"nodes", nodes}, {"edges", edges}, {"source", g.source}, {"sink", g.sink}};
}

ComputationalGraph GraphFromJson(const json& j) {
  try {
    ComputationalGraph g;
    for (const auto& b : j.at("nodes")) g.nodes.push_back(BlockFromJson(b));
    for (const auto& e : j.at("edges")) g.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    g.source = j.value("source", 0);
    g.sink = j.value("sink", static_cast<int>(g.nodes.size()) - 1);
    return g;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed graph: ") + e.what());
  }
}

ComputationalGraph CardToGraph(const ModelCard& card) {
  const auto problems = StructuralProblems(card);
  if (!problems.empty()) throw InvalidCardError("cannot build graph: " + problems.front());
  ComputationalGraph g;
  auto add = [&g](ComputeBlock b) {
    g.nodes.push_back(std::move(b));
    return static_cast<int>(g.nodes.size()) - 1;
  };
  int prev = add(ComputeBlock::Input());
  g.source = prev;
  for (int j = 0; j < card.l; ++j) {
    std::vector<int> heads;
    for (int k = 0; k < card.n[j]; ++k) {
      heads.push_back(add(ComputeBlock::Head(card.h[j], card.o[j], card.p[j])));
    }
    const int norm1 = add(ComputeBlock::AddNorm());
    for (int head : heads) {
      g.edges.emplace_back(prev, head);
      g.edges.emplace_back(head, norm1);
    }
    int stage = norm1;
    for (int w : card.f[j]) {
      const int ff = add(ComputeBlock::FeedForward(w));
      g.edges.emplace_back(stage, ff);
      stage = ff;
    }
    const int norm2 = add(ComputeBlock::AddNorm());
    g.edges.emplace_back(stage, norm2);
    const int next_h = j + 1 < card.l ? card.h[j + 1] : card.h[j];
    const int proj = add(ComputeBlock::Projection(card.h[j], next_h));
    g.edges.emplace_back(norm2, proj);
    prev = proj;
  }
  const int out = add(ComputeBlock::Output());
  g.edges.emplace_back(prev, out);
  g.sink = out;
  return g;
}

GraphHash HashGraph(const ComputationalGraph& g) {
  const int n = static_cast<int>(g.nodes.size());
  const std::vector<int> order = g.TopologicalOrder();
  std::vector<std::vector<int>> preds(n), succs(n);
  for (const auto& [a, b] : g.edges) {
    succs[a].push_back(b);
    preds[b].push_back(a);
  }
  std::vector<std::string> label_hash(n);
  for (int v = 0; v < n; ++v) label_hash[v] = Sha256Hex(g.nodes[v].Label());

  std::vector<std::string> node_hash(n);
  std::vector<std::string> parts;
  for (int v : order) {
    std::string buf;
    parts.clear();
    for (int u : preds[v]) parts.push_back(node_hash[u]);
    std::sort(parts.begin(), parts.end());
    for (const auto& s : parts) buf += s;
    buf += label_hash[v];
    parts.clear();
    for (int w : succs[v]) parts.push_back(label_hash[w]);
    std::sort(parts.begin(), parts.end());
    for (const auto& s : parts) buf += s;
    node_hash[v] = Sha256Hex(buf);
  }
  std::sort(node_hash.begin(), node_hash.end());
  std::string all;
  all.reserve(64 * n);
  for (const auto& s : node_hash) all += s;
  return GraphHash{Sha256Hex(all)};
}

std::vector<ComputeBlock> BlockCatalog(const DesignSpaceConfig& config) {
  std::vector<ComputeBlock> blocks = {ComputeBlock::Input(), ComputeBlock::Output(),
                                      ComputeBlock::AddNorm()};
  std::set<int> hidden(config.hidden.begin(), config.hidden.end());
  for (OpKind op : config.ops) {
    auto it = config.op_params.find(op);
    if (it == config.op_params.end()) continue;
    for (const auto& p : it->second) {
      for (int h : hidden) blocks.push_back(ComputeBlock::Head(h, op, p));
    }
  }
  for (int w : std::set<int>(config.ff_dims.begin(), config.ff_dims.end())) {
    blocks.push_back(ComputeBlock::FeedForward(w));
  }
  if (!hidden.empty()) {
    blocks.push_back(ComputeBlock::Projection(*hidden.begin(), *hidden.begin()));
  }
  // A projection between different sizes needs a stack boundary.
  const bool has_boundary = std::any_of(
      config.layer_counts.begin(), config.layer_counts.end(),
      [&](int l) { return config.stack_size > 0 && l / config.stack_size >= 2; });
  if (has_boundary) {
    for (int a : hidden) {
      for (int b : hidden) {
        if (a != b) blocks.push_back(ComputeBlock::Projection(a, b));
      }
    }
  }
  std::sort(blocks.begin(), blocks.end(), [](const ComputeBlock& a, const ComputeBlock& b) {
    return a.Label() < b.Label();
  });
  blocks.erase(std::unique(blocks.begin(), blocks.end(),
                           [](const ComputeBlock& a, const ComputeBlock& b) {
                             return a.Label() == b.Label();
                           }),
               blocks.end());
  return blocks;
}

bool GraphLibrary::Insert(ModelCard card, ComputationalGraph graph) {
  GraphHash hash = HashGraph(graph);
  if (index_.contains(hash)) {
    ++collisions_;
    return false;
  }
  index_.emplace(hash, entries_.size());
  entries_.push_back(Entry{std::move(hash), std::move(card), std::move(graph)});
  return true;
}

bool GraphLibrary::Insert(ModelCard card) {
  ComputationalGraph g = CardToGraph(card);
  return Insert(std::move(card), std::move(g));
}

const GraphLibrary::Entry& GraphLibrary::Find(const GraphHash& hash) const {
  return entries_[IndexOf(hash)];
}

std::size_t GraphLibrary::IndexOf(const GraphHash& hash) const {
  auto it = index_.find(hash);
  if (it == index_.end()) throw UnknownHashError("hash not in library: " + hash.hex);
  return it->second;
}

std::vector<GraphHash> GraphLibrary::Hashes() const {
  std::vector<GraphHash> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.hash);
  return out;
}

void GraphLibrary::WriteJsonl(std::ostream& out) const {
  for (const auto& e : entries_) {
    json rec = GraphToJson(e.graph);
    rec["hash"] = e.hash.hex;
    rec["card"] = CardToJson(e.card);
    out << rec.dump() << '\n';
  }
}

GraphLibrary GraphLibrary::ReadJsonl(std::istream& in) {
  GraphLibrary lib;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = "graph library line " + std::to_string(lineno) + ": ";
    ModelCard card;
    ComputationalGraph g;
    std::string stored;
    try {
      const json rec = json::parse(line);
      card = CardFromJson(rec.at("card"));
      g = GraphFromJson(rec);
      if (rec.contains("hash")) stored = rec.at("hash").get<std::string>();
    } catch (const json::exception& e) {
      throw FormatError(where + e.what());
    }
    if (!stored.empty() && HashGraph(g).hex != stored) {
      throw FormatError(where + "stored hash does not match graph");
    }
    lib.Insert(std::move(card), std::move(g));
  }
  return lib;
}

GraphLibrary BuildLibrary(const std::vector<ModelCard>& cards) {
  GraphLibrary lib;
  for (const auto& c : cards) lib.Insert(c);
  return lib;
}

}  // namespace hetnas
