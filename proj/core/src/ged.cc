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

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <thread>
#include <tuple>

#include "hetnas/error.h"
#include "hetnas/rng.h"

namespace hetnas {

int ComplexityTier(const ComputeBlock& block) {
  switch (block.kind) {
    case BlockKind::kInput:
    case BlockKind::kOutput:
    case BlockKind::kAddNorm:
      return 0;
    case BlockKind::kProjection:
      return 1;
    case BlockKind::kFeedForward:
      return 2;
    case BlockKind::kAttentionHead:
      switch (block.op) {
        case OpKind::kLT:
          return 3;
        case OpKind::kDSC:
          return 4;
        case OpKind::kSA:
          return 5;
      }
  }
  return 0;
}

double FlopProxy(const ComputeBlock& block, int seq_len) {
  const double n = seq_len;
  switch (block.kind) {
    case BlockKind::kInput:
    case BlockKind::kOutput:
      return 0.0;
    case BlockKind::kAddNorm:
      return n;
    case BlockKind::kProjection:
      if (block.from_dim == block.to_dim) return 0.0;
      return n * block.from_dim * block.to_dim;
    case BlockKind::kFeedForward:
      return n * block.width;
    case BlockKind::kAttentionHead: {
      const double h = block.hidden;
      switch (block.op) {
        case OpKind::kLT:
          // DFT and DCT both realized as dense transforms.
          return n * n * h;
        case OpKind::kDSC:
          return n * std::stod(block.param) * h;
        case OpKind::kSA: {
          double flops = n * n * h + n * h * h;
          if (block.param == "WMA") flops += n * h * h;
          return flops;
        }
      }
    }
  }
  return 0.0;
}

namespace {

int VariantKey(const ComputeBlock& b) {
  if (b.kind != BlockKind::kAttentionHead) return 0;
  if (b.param == "WMA" || b.param == "DCT") return 1;
  return 0;
}

}  // namespace

std::vector<ComputeBlock> ComplexityRank(const std::vector<ComputeBlock>& catalog,
                                         int ref_seq_len) {
  if (catalog.empty()) throw InvalidArgumentError("cannot rank an empty catalog");
  std::vector<ComputeBlock> ranked = catalog;
  auto key = [ref_seq_len](const ComputeBlock& b) {
    return std::make_tuple(ComplexityTier(b), FlopProxy(b, ref_seq_len), VariantKey(b),
                           b.Label());
  };
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](const ComputeBlock& a, const ComputeBlock& b) { return key(a) < key(b); });
  return ranked;
}

CostModel::CostModel(const std::vector<ComputeBlock>& ranked_blocks) {
  if (ranked_blocks.empty()) throw InvalidArgumentError("empty cost model");
  for (const auto& b : ranked_blocks) {
    std::string label = b.Label();
    if (rank_.contains(label)) continue;
    rank_.emplace(label, static_cast<int>(labels_.size()));
    labels_.push_back(std::move(label));
  }
}

CostModel CostModel::ForConfig(const DesignSpaceConfig& config, int ref_seq_len) {
  return CostModel(ComplexityRank(BlockCatalog(config), ref_seq_len));
}

int CostModel::RankOf(const std::string& label) const {
  auto it = rank_.find(label);
  if (it == rank_.end()) throw InvalidArgumentError("block label not in cost model: " + label);
  return it->second;
}

namespace {

constexpr int kEpsilon = -1;

struct PackedGraph {
  int n = 0;
  int edges = 0;
  std::vector<int> rank;
  std::vector<std::uint64_t> out;
  std::vector<std::uint64_t> in;
};

PackedGraph Pack(const ComputationalGraph& g, const CostModel& cost) {
  PackedGraph p;
  p.n = static_cast<int>(g.nodes.size());
  p.rank.resize(p.n);
  for (int v = 0; v < p.n; ++v) p.rank[v] = cost.RankOf(g.nodes[v].Label());
  p.out.assign(p.n, 0);
  p.in.assign(p.n, 0);
  for (const auto& [a, b] : g.edges) {
    const std::uint64_t bit_b = std::uint64_t{1} << b;
    if (p.out[a] & bit_b) continue;  // parallel edges collapse
    p.out[a] |= bit_b;
    p.in[b] |= std::uint64_t{1} << a;
    ++p.edges;
  }
  return p;
}

// Earth mover's distance on the rank line with the unmatched surplus of the
// larger side sent to position -1 (deletion or insertion), in cost units.
int NodeBoundUnits(const std::vector<int>& hist1, const std::vector<int>& hist2) {
  int n1 = 0, n2 = 0;
  for (int c : hist1) n1 += c;
  for (int c : hist2) n2 += c;
  int c1 = n1 > n2 ? 0 : n2 - n1;  // padding sits at -1
  int c2 = n2 > n1 ? 0 : n1 - n2;
  int total = std::abs(c1 - c2);   // gap between -1 and 0
  const int b = static_cast<int>(hist1.size());
  for (int t = 0; t + 1 < b; ++t) {
    c1 += hist1[t];
    c2 += hist2[t];
    total += std::abs(c1 - c2);
  }
  return 2 * total;
}

int PackedBoundUnits(const PackedGraph& a, const PackedGraph& b, int bins) {
  std::vector<int> h1(bins, 0), h2(bins, 0);
  for (int r : a.rank) ++h1[r];
  for (int r : b.rank) ++h2[r];
  return NodeBoundUnits(h1, h2) + std::abs(a.edges - b.edges) * CostModel::kEdgeUnits;
}

std::vector<int> TwinPredecessors(const PackedGraph& g, const std::vector<int>& order) {
  std::vector<int> prev(g.n, -1);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const int u = order[i];
    for (std::size_t k = i; k-- > 0;) {
      const int w = order[k];
      if (g.rank[w] == g.rank[u] && g.out[w] == g.out[u] && g.in[w] == g.in[u]) {
        prev[u] = w;
        break;
      }
    }
  }
  return prev;
}

// Edit-path cost of a complete mapping, in cost units.
int PathUnits(const PackedGraph& a, const PackedGraph& b, const std::vector<int>& phi) {
  std::vector<int> inverse(b.n, kEpsilon);
  int units = 0;
  for (int u = 0; u < a.n; ++u) {
    const int x = phi[u];
    if (x == kEpsilon) {
      units += 2 * (a.rank[u] + 1);
      continue;
    }
    inverse[x] = u;
    units += 2 * std::abs(a.rank[u] - b.rank[x]);
  }
  for (int x = 0; x < b.n; ++x) {
    if (inverse[x] == kEpsilon) units += 2 * (b.rank[x] + 1);
  }
  for (int u = 0; u < a.n; ++u) {
    for (std::uint64_t m = a.out[u]; m; m &= m - 1) {
      const int w = std::countr_zero(m);
      const int x = phi[u], y = phi[w];
      if (x == kEpsilon || y == kEpsilon || !(b.out[x] >> y & 1)) units += CostModel::kEdgeUnits;
    }
  }
  for (int x = 0; x < b.n; ++x) {
    for (std::uint64_t m = b.out[x]; m; m &= m - 1) {
      const int y = std::countr_zero(m);
      const int u = inverse[x], w = inverse[y];
      if (u == kEpsilon || w == kEpsilon || !(a.out[u] >> w & 1)) units += CostModel::kEdgeUnits;
    }
  }
  return units;
}

// First-improvement local search over reassignments and swaps of images.
int ImproveMapping(const PackedGraph& a, const PackedGraph& b, std::vector<int>& phi) {
  int best = PathUnits(a, b, phi);
  bool improved = true;
  while (improved) {
    improved = false;
    std::vector<int> owner(b.n, kEpsilon);
    for (int u = 0; u < a.n; ++u) {
      if (phi[u] != kEpsilon) owner[phi[u]] = u;
    }
    for (int u = 0; u < a.n; ++u) {
      for (int x = kEpsilon; x < b.n; ++x) {
        if (x == phi[u]) continue;
        const int other = x == kEpsilon ? kEpsilon : owner[x];
        const int old_u = phi[u];
        phi[u] = x;
        if (other != kEpsilon) phi[other] = old_u;
        const int cost = PathUnits(a, b, phi);
        if (cost < best) {
          best = cost;
          improved = true;
          if (old_u != kEpsilon) owner[old_u] = other;
          if (x != kEpsilon) owner[x] = u;
        } else {
          phi[u] = old_u;
          if (other != kEpsilon) phi[other] = x;
        }
      }
    }
  }
  return best;
}

constexpr int kMaxDegree = 64;

// Upper bound on edges preserved between two subgraphs given their degree
// histograms: pairing degrees in sorted order maximizes the sum of minima.
int MaxPairedMin(const int* h1, const int* h2, int top) {
  int total = 0;
  int i = top, j = top;
  int c1 = h1[top], c2 = h2[top];
  while (i > 0 && j > 0) {
    if (c1 == 0) {
      c1 = h1[--i];
      continue;
    }
    if (c2 == 0) {
      c2 = h2[--j];
      continue;
    }
    const int take = std::min(c1, c2);
    total += take * std::min(i, j);
    c1 -= take;
    c2 -= take;
  }
  return total;
}

class BranchAndBound {
 public:
  BranchAndBound(const PackedGraph& a, const PackedGraph& b, std::vector<int> order,
                 int bins, std::uint64_t budget)
      : a_(a), b_(b), order_(std::move(order)), bins_(bins), budget_(budget) {
    phi_.assign(a_.n, kEpsilon);
    psi_.assign(b_.n, kEpsilon);
    rem1_.assign(bins_, 0);
    rem2_.assign(bins_, 0);
    for (int r : a_.rank) ++rem1_[r];
    for (int r : b_.rank) ++rem2_[r];
    std::vector<int> identity(b_.n);
    for (int x = 0; x < b_.n; ++x) identity[x] = x;
    twin1_ = TwinPredecessors(a_, order_);
    twin2_ = TwinPredecessors(b_, identity);
    // Edges of g1 with both endpoints among order_[k..].
    open1_.assign(a_.n + 1, 0);
    std::uint64_t later = 0;
    int count = 0;
    for (int k = a_.n; k-- > 0;) {
      const int u = order_[k];
      count += std::popcount((a_.out[u] | a_.in[u]) & later);
      later |= std::uint64_t{1} << u;
      open1_[k] = count;
    }
    top_ = 0;
    for (int v = 0; v < a_.n; ++v) {
      top_ = std::max({top_, std::popcount(a_.out[v]), std::popcount(a_.in[v])});
    }
    for (int x = 0; x < b_.n; ++x) {
      top_ = std::max({top_, std::popcount(b_.out[x]), std::popcount(b_.in[x])});
    }
    const int width = top_ + 1;
    hist1_out_.assign((a_.n + 1) * width, 0);
    hist1_in_.assign((a_.n + 1) * width, 0);
    for (int k = 0; k <= a_.n; ++k) {
      std::uint64_t rest = 0;
      for (int q = k; q < a_.n; ++q) rest |= std::uint64_t{1} << order_[q];
      for (int q = k; q < a_.n; ++q) {
        const int v = order_[q];
        ++hist1_out_[k * width + std::popcount(a_.out[v] & rest)];
        ++hist1_in_[k * width + std::popcount(a_.in[v] & rest)];
      }
    }
    children_.resize(a_.n + 1);
    best_phi_.assign(a_.n, kEpsilon);
    mask2_ = b_.n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << b_.n) - 1;
  }

  void Run(int initial_upper) {
    best_ = initial_upper;
    Recurse(0, 0, 0, 0, b_.edges);
  }

  int best() const { return best_; }
  const std::vector<int>& best_mapping() const { return best_phi_; }
  bool found() const { return found_; }
  bool aborted() const { return aborted_; }
  std::uint64_t expansions() const { return expansions_; }

 private:
  struct Child {
    int f;
    int inc;
    int x;
    int closed2;  // g2 edges closed by placing x
    int pending;  // pending-edge bound after placing u
    int open2;    // g2 edges among unused nodes after placing u
  };

  // Lower bound on the edit cost of edges from processed node w to the
  // unprocessed part, under the given processed/used masks.
  int PendingTerm(int w, std::uint64_t processed, std::uint64_t used) const {
    const int o1 = std::popcount(a_.out[w] & ~processed);
    const int i1 = std::popcount(a_.in[w] & ~processed);
    const int y = phi_[w];
    if (y == kEpsilon) return o1 + i1;
    const int o2 = std::popcount(b_.out[y] & ~used);
    const int i2 = std::popcount(b_.in[y] & ~used);
    return std::abs(o1 - o2) + std::abs(i1 - i2);
  }

  // Edit cost lower bound for edges among unprocessed g1 nodes (suffix k)
  // and g2 nodes outside `used`.
  int OpenBound(int k, int open2, std::uint64_t used) const {
    const int open1 = open1_[k];
    if (open1 == 0 || open2 == 0) return open1 + open2;
    const int width = top_ + 1;
    int ho[kMaxDegree + 1] = {0}, hi[kMaxDegree + 1] = {0};
    for (std::uint64_t m = ~used & mask2_; m; m &= m - 1) {
      const int y = std::countr_zero(m);
      ++ho[std::popcount(b_.out[y] & ~used)];
      ++hi[std::popcount(b_.in[y] & ~used)];
    }
    const int keep = std::min({open1, open2,
                               MaxPairedMin(&hist1_out_[k * width], ho, top_),
                               MaxPairedMin(&hist1_in_[k * width], hi, top_)});
    return open1 + open2 - 2 * keep;
  }

  // Pending bound after processing u (mapped to x, or deleted).
  int PendingAfter(int u, int x, int pending) {
    const std::uint64_t bit_u = std::uint64_t{1} << u;
    const std::uint64_t p_new = processed_ | bit_u;
    const std::uint64_t u_new = x == kEpsilon ? used_ : used_ | (std::uint64_t{1} << x);
    std::uint64_t affected = (a_.out[u] | a_.in[u]) & processed_;
    if (x != kEpsilon) {
      for (std::uint64_t m = (b_.out[x] | b_.in[x]) & used_; m; m &= m - 1) {
        affected |= std::uint64_t{1} << psi_[std::countr_zero(m)];
      }
    }
    for (std::uint64_t m = affected; m; m &= m - 1) {
      const int w = std::countr_zero(m);
      pending += PendingTerm(w, p_new, u_new) - PendingTerm(w, processed_, used_);
    }
    phi_[u] = x;
    pending += PendingTerm(u, p_new, u_new);
    phi_[u] = kEpsilon;
    return pending;
  }

  void Recurse(int k, int g, int closed_b, int pending, int open2) {
    if (aborted_) return;
    if (++expansions_ > budget_) {
      aborted_ = true;
      return;
    }
    if (k == a_.n) {
      int cost = g;
      for (int x = 0; x < b_.n; ++x) {
        if (!(used_ >> x & 1)) cost += 2 * (b_.rank[x] + 1);
      }
      cost += (b_.edges - closed_b) * CostModel::kEdgeUnits;
      if (cost < best_) {
        best_ = cost;
        best_phi_ = phi_;
        found_ = true;
      }
      return;
    }
    const int u = order_[k];
    const int ru = a_.rank[u];
    auto& kids = children_[k];
    kids.clear();
    --rem1_[ru];

    int lo_x = 0;
    bool only_eps = false;
    if (twin1_[u] >= 0) {
      const int t = phi_[twin1_[u]];
      if (t == kEpsilon) only_eps = true;
      else lo_x = t + 1;
    }
    const std::uint64_t nbr1 = (a_.out[u] | a_.in[u]) & processed_;

    // Deletion.
    {
      const int inc = 2 * (ru + 1) + std::popcount(nbr1) * CostModel::kEdgeUnits;
      const int pend = PendingAfter(u, kEpsilon, pending);
      const int h = NodeBoundUnits(rem1_, rem2_) +
                    (pend + OpenBound(k + 1, open2, used_)) * CostModel::kEdgeUnits;
      const int f = g + inc + h;
      if (f < best_) kids.push_back({f, inc, kEpsilon, 0, pend, open2});
    }
    if (!only_eps) {
      for (int x = lo_x; x < b_.n; ++x) {
        if (used_ >> x & 1) continue;
        if (twin2_[x] >= 0 && !(used_ >> twin2_[x] & 1)) continue;
        const int rx = b_.rank[x];
        int inc = 2 * std::abs(ru - rx);
        // g1 edges between u and processed nodes.
        for (std::uint64_t m = a_.out[u] & processed_; m; m &= m - 1) {
          const int w = std::countr_zero(m);
          const int y = phi_[w];
          if (y == kEpsilon || !(b_.out[x] >> y & 1)) inc += CostModel::kEdgeUnits;
        }
        for (std::uint64_t m = a_.in[u] & processed_; m; m &= m - 1) {
          const int w = std::countr_zero(m);
          const int y = phi_[w];
          if (y == kEpsilon || !(b_.out[y] >> x & 1)) inc += CostModel::kEdgeUnits;
        }
        // g2 edges between x and used nodes.
        int closed2 = 0;
        for (std::uint64_t m = b_.out[x] & used_; m; m &= m - 1) {
          const int y = std::countr_zero(m);
          ++closed2;
          if (!(a_.out[u] >> psi_[y] & 1)) inc += CostModel::kEdgeUnits;
        }
        for (std::uint64_t m = b_.in[x] & used_; m; m &= m - 1) {
          const int y = std::countr_zero(m);
          ++closed2;
          if (!(a_.out[psi_[y]] >> u & 1)) inc += CostModel::kEdgeUnits;
        }
        const std::uint64_t unused_others = ~used_ & ~(std::uint64_t{1} << x);
        const int o2 = open2 - std::popcount((b_.out[x] | b_.in[x]) & unused_others);
        --rem2_[rx];
        const int node_h = NodeBoundUnits(rem1_, rem2_);
        ++rem2_[rx];
        if (g + inc + node_h >= best_) continue;
        const int pend = PendingAfter(u, x, pending);
        const int f = g + inc + node_h +
                      (pend + OpenBound(k + 1, o2, used_ | (std::uint64_t{1} << x))) *
                          CostModel::kEdgeUnits;
        if (f < best_) kids.push_back({f, inc, x, closed2, pend, o2});
      }
    }
    std::sort(kids.begin(), kids.end(), [](const Child& p, const Child& q) {
      if (p.f != q.f) return p.f < q.f;
      // Prefer real matches over deletion, then lower index.
      const int px = p.x == kEpsilon ? std::numeric_limits<int>::max() : p.x;
      const int qx = q.x == kEpsilon ? std::numeric_limits<int>::max() : q.x;
      return px < qx;
    });
    // Copy: deeper levels reuse their own buffers, but keep this one stable.
    const std::vector<Child> local = kids;
    processed_ |= std::uint64_t{1} << u;
    for (const Child& c : local) {
      if (c.f >= best_ || aborted_) break;
      phi_[u] = c.x;
      if (c.x != kEpsilon) {
        used_ |= std::uint64_t{1} << c.x;
        psi_[c.x] = u;
        --rem2_[b_.rank[c.x]];
      }
      Recurse(k + 1, g + c.inc, closed_b + c.closed2, c.pending, c.open2);
      if (c.x != kEpsilon) {
        used_ &= ~(std::uint64_t{1} << c.x);
        psi_[c.x] = kEpsilon;
        ++rem2_[b_.rank[c.x]];
      }
      phi_[u] = kEpsilon;
    }
    processed_ &= ~(std::uint64_t{1} << u);
    ++rem1_[ru];
  }

  const PackedGraph& a_;
  const PackedGraph& b_;
  std::vector<int> order_;
  int bins_;
  std::uint64_t budget_;
  std::vector<int> phi_, psi_;
  std::vector<int> rem1_, rem2_;
  std::vector<int> twin1_, twin2_;
  std::vector<int> open1_;
  std::vector<int> hist1_out_, hist1_in_;
  int top_ = 0;
  std::uint64_t mask2_ = 0;
  std::vector<std::vector<Child>> children_;
  std::vector<int> best_phi_;
  std::uint64_t used_ = 0;
  std::uint64_t processed_ = 0;
  int best_ = std::numeric_limits<int>::max();
  bool found_ = false;
  bool aborted_ = false;
  std::uint64_t expansions_ = 0;
};

// Orders the pair so that Ged(g1, g2) and Ged(g2, g1) run the same search.
bool ShouldSwap(const ComputationalGraph& g1, const ComputationalGraph& g2) {
  if (g1.size() != g2.size()) return g1.size() < g2.size();
  if (g1.edges.size() != g2.edges.size()) return g1.edges.size() < g2.edges.size();
  return HashGraph(g2) < HashGraph(g1);
}

}  // namespace

double GedLowerBound(const ComputationalGraph& g1, const ComputationalGraph& g2,
                     const CostModel& cost) {
  const PackedGraph a = Pack(g1, cost);
  const PackedGraph b = Pack(g2, cost);
  return PackedBoundUnits(a, b, cost.size()) * cost.UnitValue();
}

GedValue Ged(const ComputationalGraph& g1, const ComputationalGraph& g2,
             const CostModel& cost, const GedOptions& options) {
  if (ShouldSwap(g1, g2)) return Ged(g2, g1, cost, options);
  const int limit = std::min(options.node_budget, 64);
  if (static_cast<int>(std::max(g1.size(), g2.size())) > limit) {
    const double lb = GedLowerBound(g1, g2, cost);
    return GedValue{lb, false, std::numeric_limits<double>::infinity(), 0};
  }
  const PackedGraph a = Pack(g1, cost);
  const PackedGraph b = Pack(g2, cost);
  // Trivial edit path: delete everything, insert everything.
  int trivial = a.edges + b.edges;
  for (int r : a.rank) trivial += 2 * (r + 1);
  for (int r : b.rank) trivial += 2 * (r + 1);

  const std::vector<int> order = g1.TopologicalOrder();
  // Seed the bound with the first leaf of the search, polished locally.
  int upper = trivial;
  {
    BranchAndBound dive(a, b, order, cost.size(), static_cast<std::uint64_t>(a.n) + 1);
    dive.Run(trivial + 1);
    if (dive.found()) {
      std::vector<int> phi = dive.best_mapping();
      upper = std::min(upper, ImproveMapping(a, b, phi));
    }
  }
  BranchAndBound search(a, b, order, cost.size(), options.expansion_budget);
  search.Run(upper);
  GedValue out;
  out.expansions = search.expansions();
  out.upper = std::min(search.best(), upper) * cost.UnitValue();
  if (search.aborted()) {
    out.exact = false;
    out.value = PackedBoundUnits(a, b, cost.size()) * cost.UnitValue();
  } else {
    out.exact = true;
    out.value = out.upper;
  }
  return out;
}

double EditPathCost(const ComputationalGraph& g1, const ComputationalGraph& g2,
                    const CostModel& cost, const std::vector<int>& mapping) {
  const PackedGraph a = Pack(g1, cost);
  const PackedGraph b = Pack(g2, cost);
  if (static_cast<int>(mapping.size()) != a.n) {
    throw InvalidArgumentError("mapping size differs from g1 node count");
  }
  std::vector<int> inverse(b.n, kEpsilon);
  int units = 0;
  for (int u = 0; u < a.n; ++u) {
    const int x = mapping[u];
    if (x == kEpsilon) {
      units += 2 * (a.rank[u] + 1);
      continue;
    }
    if (x < 0 || x >= b.n || inverse[x] != kEpsilon) {
      throw InvalidArgumentError("mapping is not a partial injection");
    }
    inverse[x] = u;
    units += 2 * std::abs(a.rank[u] - b.rank[x]);
  }
  for (int x = 0; x < b.n; ++x) {
    if (inverse[x] == kEpsilon) units += 2 * (b.rank[x] + 1);
  }
  for (int u = 0; u < a.n; ++u) {
    for (std::uint64_t m = a.out[u]; m; m &= m - 1) {
      const int w = std::countr_zero(m);
      const int x = mapping[u], y = mapping[w];
      if (x == kEpsilon || y == kEpsilon || !(b.out[x] >> y & 1)) units += CostModel::kEdgeUnits;
    }
  }
  for (int x = 0; x < b.n; ++x) {
    for (std::uint64_t m = b.out[x]; m; m &= m - 1) {
      const int y = std::countr_zero(m);
      const int u = inverse[x], w = inverse[y];
      if (u == kEpsilon || w == kEpsilon || !(a.out[u] >> w & 1)) units += CostModel::kEdgeUnits;
    }
  }
  return units * cost.UnitValue();
}

DistancePair MakeDistancePair(GraphHash a, GraphHash b, const GedValue& value) {
  if (b < a) std::swap(a, b);
  return DistancePair{std::move(a), std::move(b), value.value, value.exact,
                      value.exact ? value.value : value.upper};
}

void WriteGedCache(std::ostream& out, const std::vector<DistancePair>& pairs) {
  for (const auto& p : pairs) {
    nlohmann::json rec = {{"hash1", p.hash1.hex}, {"hash2", p.hash2.hex},
                          {"ged", p.ged}, {"exact", p.exact}, {"upper", p.upper}};
    out << rec.dump() << '\n';
  }
}

std::vector<DistancePair> ReadGedCache(std::istream& in) {
  std::vector<DistancePair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      DistancePair p{GraphHash{rec.at("hash1").get<std::string>()},
                     GraphHash{rec.at("hash2").get<std::string>()},
                     rec.at("ged").get<double>(), rec.value("exact", true), 0.0};
      p.upper = rec.value("upper", p.ged);
      if (p.hash2 < p.hash1) std::swap(p.hash1, p.hash2);
      if (!(p.ged >= 0.0) || !(p.upper >= p.ged)) throw FormatError("invalid GED values");
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("GED cache line " + std::to_string(lineno) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("GED cache line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> SamplePairs(
    const GraphLibrary& library, const CostModel& cost,
    const PairSamplingOptions& options) {
  const std::size_t s = library.size();
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (s < 2) return out;
  const std::size_t all = s * (s - 1) / 2;
  if (all <= options.pair_budget) {
    out.reserve(all);
    for (std::size_t i = 0; i < s; ++i) {
      for (std::size_t j = i + 1; j < s; ++j) out.emplace_back(i, j);
    }
    return out;
  }
  Rng rng(options.seed);
  std::set<std::pair<std::size_t, std::size_t>> chosen;
  auto add = [&](std::size_t i, std::size_t j) {
    if (i == j || chosen.size() >= options.pair_budget) return;
    if (j < i) std::swap(i, j);
    if (chosen.emplace(i, j).second) out.emplace_back(i, j);
  };
  for (std::size_t i = 0; i < s && chosen.size() < options.pair_budget; ++i) {
    for (int k = 0; k < options.partners_per_graph; ++k) {
      add(i, static_cast<std::size_t>(rng.Below(s)));
    }
  }
  std::vector<PackedGraph> packed;
  packed.reserve(s);
  for (const auto& e : library.entries()) packed.push_back(Pack(e.graph, cost));
  const std::size_t set_size = std::min<std::size_t>(options.anchor_set_size, s);
  std::size_t stalls = 0;
  while (chosen.size() < options.pair_budget && stalls < 64) {
    const std::size_t anchor = static_cast<std::size_t>(rng.Below(s));
    std::vector<std::pair<int, std::size_t>> near;
    near.reserve(s);
    for (std::size_t j = 0; j < s; ++j) {
      near.emplace_back(PackedBoundUnits(packed[anchor], packed[j], cost.size()), j);
    }
    std::partial_sort(near.begin(), near.begin() + set_size, near.end());
    const std::size_t before = chosen.size();
    for (std::size_t a = 0; a < set_size; ++a) {
      for (std::size_t b = a + 1; b < set_size; ++b) add(near[a].second, near[b].second);
    }
    stalls = chosen.size() == before ? stalls + 1 : 0;
  }
  return out;
}

std::vector<DistancePair> ComputeDistances(
    const GraphLibrary& library,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
    const CostModel& cost, const GedOptions& options, int workers) {
  std::vector<DistancePair> out(pairs.size());
  auto work = [&](std::size_t i) {
    const auto& a = library.at(pairs[i].first);
    const auto& b = library.at(pairs[i].second);
    out[i] = MakeDistancePair(a.hash, b.hash, Ged(a.graph, b.graph, cost, options));
  };
  workers = std::max(1, workers);
  if (workers == 1 || pairs.size() < 2) {
    for (std::size_t i = 0; i < pairs.size(); ++i) work(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < pairs.size(); i = next++) work(i);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace hetnas
