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

#ifndef HETNAS_TESTS_TEST_SUPPORT_H_
#define HETNAS_TESTS_TEST_SUPPORT_H_

// Independent oracles and generators shared by the unit tests and the
// acceptance runner.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hetnas/design_space.h"
#include "hetnas/ged.h"
#include "hetnas/graph.h"
#include "hetnas/rng.h"
#include "hetnas/surrogate.h"

namespace hetnas::test {

inline ModelCard RandomCard(Rng& rng, const std::vector<LayerSpec>& specs) {
  const int l = rng.Bernoulli(0.5) ? 2 : 4;
  std::vector<LayerSpec> layers;
  for (int j = 0; j < l; ++j) layers.push_back(specs[rng.Below(specs.size())]);
  return ModelCard::FromLayers(layers);
}

// Changes exactly one field of one layer to a different allowed value.
inline ModelCard MutateOneField(const ModelCard& card, Rng& rng) {
  ModelCard m = card;
  const int j = static_cast<int>(rng.Below(card.l));
  switch (rng.Below(5)) {
    case 0: {  // operation parameter within the same family
      static const std::map<OpKind, std::pair<std::string, std::string>> alt = {
          {OpKind::kSA, {"SDP", "WMA"}}, {OpKind::kLT, {"DFT", "DCT"}}, {OpKind::kDSC, {"5", "9"}}};
      const auto& [a, b] = alt.at(m.o[j]);
      m.p[j] = m.p[j] == a ? b : a;
      break;
    }
    case 1: {  // operation (with its default parameter)
      const OpKind ops[] = {OpKind::kSA, OpKind::kLT, OpKind::kDSC};
      OpKind next = ops[(static_cast<int>(m.o[j]) + 1 + rng.Below(2)) % 3];
      m.o[j] = next;
      m.p[j] = next == OpKind::kSA ? "SDP" : next == OpKind::kLT ? "DFT" : "5";
      break;
    }
    case 2:
      m.n[j] = m.n[j] == 2 ? 4 : 2;
      break;
    case 3:
      m.h[j] = m.h[j] == 128 ? 256 : 128;
      break;
    default: {
      auto& w = m.f[j][rng.Below(m.f[j].size())];
      w = w == 512 ? 1024 : 512;
      break;
    }
  }
  return m;
}

inline ComputationalGraph RandomDag(Rng& rng, const std::vector<ComputeBlock>& catalog, int n) {
  ComputationalGraph g;
  for (int i = 0; i < n; ++i) g.nodes.push_back(catalog[rng.Below(catalog.size())]);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.Bernoulli(0.35)) g.edges.emplace_back(i, j);
    }
  }
  g.source = 0;
  g.sink = n - 1;
  return g;
}

// Edit cost of a node mapping, computed directly from the ranked labels.
inline double MappingCost(const ComputationalGraph& g1, const ComputationalGraph& g2,
                   const CostModel& cost, const std::vector<int>& phi) {
  const double unit = 1.0 / (2.0 * cost.size());
  auto rank = [&](const ComputeBlock& b) { return cost.RankOf(b.Label()); };
  double total = 0.0;
  std::vector<bool> hit(g2.size(), false);
  for (std::size_t u = 0; u < g1.size(); ++u) {
    if (phi[u] < 0) {
      total += 2.0 * (rank(g1.nodes[u]) + 1) * unit;
    } else {
      hit[phi[u]] = true;
      total += 2.0 * std::abs(rank(g1.nodes[u]) - rank(g2.nodes[phi[u]])) * unit;
    }
  }
  for (std::size_t x = 0; x < g2.size(); ++x) {
    if (!hit[x]) total += 2.0 * (rank(g2.nodes[x]) + 1) * unit;
  }
  std::set<std::pair<int, int>> e2(g2.edges.begin(), g2.edges.end());
  std::size_t matched = 0;
  for (const auto& [a, b] : g1.edges) {
    if (phi[a] >= 0 && phi[b] >= 0 && e2.contains({phi[a], phi[b]})) ++matched;
  }
  total += static_cast<double>(g1.edges.size() + g2.edges.size() - 2 * matched) * unit;
  return total;
}

// Minimum over every partial injective mapping of g1 into g2.
inline double ExhaustiveGed(const ComputationalGraph& g1, const ComputationalGraph& g2,
                     const CostModel& cost) {
  const int n1 = static_cast<int>(g1.size());
  const int n2 = static_cast<int>(g2.size());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> phi(n1, -1);
  std::vector<bool> used(n2, false);
  std::function<void(int)> rec = [&](int u) {
    if (u == n1) {
      best = std::min(best, MappingCost(g1, g2, cost, phi));
      return;
    }
    phi[u] = -1;
    rec(u + 1);
    for (int x = 0; x < n2; ++x) {
      if (used[x]) continue;
      used[x] = true;
      phi[u] = x;
      rec(u + 1);
      used[x] = false;
      phi[u] = -1;
    }
  };
  rec(0);
  return best;
}

inline constexpr double kStep = 1e-5;
inline constexpr double kRelTol = 1e-4;

// |a - b| relative to the larger magnitude, with a floor for values near 0.
inline double RelErr(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

inline Mlp RandomNet(Rng& rng, int in, int out, Activation act = Activation::kTanh) {
  std::vector<int> sizes = {in};
  const int depth = 1 + static_cast<int>(rng.Below(3));
  for (int i = 0; i < depth; ++i) sizes.push_back(2 + static_cast<int>(rng.Below(6)));
  sizes.push_back(out);
  Mlp net(sizes, act, rng);
  // Non-zero biases so every code path is exercised.
  auto p = net.Params();
  for (auto& v : p) v += 0.3 * rng.Normal();
  net.SetParams(p);
  return net;
}

inline Eigen::MatrixXd RandomBatch(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd x(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) x(i, j) = rng.Normal();
  }
  return x;
}

inline std::vector<double> RandomTargets(Rng& rng, int n) {
  std::vector<double> o(n);
  for (auto& v : o) v = rng.Uniform();
  return o;
}

template <typename T>
inline bool Has(const std::set<T>& s, const T& v) {
  return s.contains(v);
}

// Brute force: filter every standard-space layer configuration by the values found
// at each depth among the parents, then take the product over depths.
inline std::set<std::string> BruteForceChildren(const std::vector<ModelCard>& parents, bool hetero) {
  const auto all = EnumerateLayerSpecs(DesignSpaceConfig::Standard(), hetero);
  std::set<int> lengths;
  int max_len = 0;
  for (const auto& p : parents) {
    lengths.insert(p.l);
    max_len = std::max(max_len, p.l);
  }
  std::vector<std::vector<LayerSpec>> allowed(max_len);
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
      for (int w : p.f[j]) widths.insert(w);
      depths.insert(static_cast<int>(p.f[j].size()));
    }
    for (const auto& s : all) {
      bool ok = Has(ops, {s.op, s.param}) && Has(heads, s.heads) && Has(hidden, s.hidden);
      if (hetero) {
        ok = ok && Has(depths, static_cast<int>(s.ff.size())) &&
             std::all_of(s.ff.begin(), s.ff.end(), [&](int w) { return widths.contains(w); });
      } else {
        ok = ok && Has(stacks, s.ff);
      }
      if (ok) allowed[j].push_back(s);
    }
  }
  std::set<std::string> out;
  for (int l : lengths) {
    std::vector<std::size_t> idx(l, 0);
    while (true) {
      std::vector<LayerSpec> layers;
      for (int j = 0; j < l; ++j) layers.push_back(allowed[j][idx[j]]);
      out.insert(CanonicalString(ModelCard::FromLayers(layers)));
      int j = 0;
      while (j < l && ++idx[j] == allowed[j].size()) idx[j++] = 0;
      if (j == l) break;
    }
  }
  return out;
}

}  // namespace hetnas::test

#endif  // HETNAS_TESTS_TEST_SUPPORT_H_
