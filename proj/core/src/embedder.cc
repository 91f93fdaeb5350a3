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

#include "hetnas/embedder.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <tuple>

#include "hetnas/error.h"
#include "hetnas/rng.h"

namespace hetnas {

std::size_t EmbeddingTable::IndexOf(const GraphHash& hash) const {
  auto it = index_.find(hash);
  if (it == index_.end()) throw UnknownHashError("hash not in embedding table: " + hash.hex);
  return it->second;
}

void EmbeddingTable::Add(const GraphHash& hash, std::span<const double> vec) {
  if (static_cast<int>(vec.size()) != d_) {
    throw InvalidArgumentError("embedding dimension mismatch");
  }
  for (double v : vec) {
    if (!std::isfinite(v)) throw InvalidArgumentError("non-finite embedding entry");
  }
  if (index_.contains(hash)) throw InvalidArgumentError("duplicate hash in embedding table");
  index_.emplace(hash, hashes_.size());
  hashes_.push_back(hash);
  data_.insert(data_.end(), vec.begin(), vec.end());
}

double EmbeddingTable::Distance(std::size_t i, std::size_t j) const {
  const auto a = Row(i);
  const auto b = Row(j);
  double s = 0.0;
  for (int k = 0; k < d_; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

std::size_t EmbeddingTable::Nearest(std::span<const double> x,
                                    const std::vector<bool>* allowed) const {
  std::size_t best = size();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < size(); ++i) {
    if (allowed && !(*allowed)[i]) continue;
    const auto r = Row(i);
    double s = 0.0;
    for (int k = 0; k < d_; ++k) s += (r[k] - x[k]) * (r[k] - x[k]);
    if (s < best_d || (s == best_d && best < size() && hashes_[i] < hashes_[best])) {
      best_d = s;
      best = i;
    }
  }
  if (best == size()) throw InvalidArgumentError("no candidate rows for nearest-neighbour snap");
  return best;
}

void EmbeddingTable::WriteJson(std::ostream& out) const {
  nlohmann::json j;
  j["d"] = d_;
  j["seed"] = seed;
  j["epochs"] = epochs;
  j["final_loss"] = final_loss;
  nlohmann::json vecs = nlohmann::json::object();
  for (std::size_t i = 0; i < size(); ++i) {
    const auto r = Row(i);
    vecs[hashes_[i].hex] = std::vector<double>(r.begin(), r.end());
  }
  j["vectors"] = std::move(vecs);
  out << j.dump() << '\n';
}

EmbeddingTable EmbeddingTable::ReadJson(std::istream& in) {
  try {
    const auto j = nlohmann::json::parse(in);
    EmbeddingTable t(j.at("d").get<int>());
    t.seed = j.value("seed", std::uint64_t{0});
    t.epochs = j.value("epochs", 0);
    t.final_loss = j.value("final_loss", 0.0);
    for (const auto& [hash, vec] : j.at("vectors").items()) {
      t.Add(GraphHash{hash}, vec.get<std::vector<double>>());
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed embedding file: ") + e.what());
  }
}

EmbeddingResult TrainEmbeddings(const std::vector<DistancePair>& pairs, int d,
                                std::uint64_t seed, const EmbeddingOptions& options) {
  if (pairs.empty()) throw InvalidArgumentError("embedding training needs at least one pair");
  if (d <= 0) throw InvalidArgumentError("embedding dimension must be positive");

  std::set<GraphHash> hash_set;
  for (const auto& p : pairs) {
    hash_set.insert(p.hash1);
    hash_set.insert(p.hash2);
  }
  const std::vector<GraphHash> hashes(hash_set.begin(), hash_set.end());
  std::map<GraphHash, std::size_t> index;
  for (std::size_t i = 0; i < hashes.size(); ++i) index.emplace(hashes[i], i);

  EmbeddingResult result;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : pairs) {
    lo = std::min(lo, p.Target());
    hi = std::max(hi, p.Target());
  }
  if (!options.normalize) {
    lo = 0.0;
    hi = 1.0;
  } else if (!(hi > lo)) {
    // Constant targets: scale so the common value maps to 1.
    hi = lo > 0.0 ? lo : 1.0;
    lo = 0.0;
  }
  result.ged_min = lo;
  result.ged_max = hi;

  struct Sample {
    std::size_t i, j;
    double t;
  };
  std::vector<Sample> targets;
  targets.reserve(pairs.size());
  for (const auto& p : pairs) {
    const std::size_t a = index.at(p.hash1), b = index.at(p.hash2);
    targets.push_back({std::min(a, b), std::max(a, b), (p.Target() - lo) / (hi - lo)});
  }
  // Canonical order so the result does not depend on the input order.
  std::sort(targets.begin(), targets.end(), [](const Sample& u, const Sample& w) {
    return std::tie(u.i, u.j, u.t) < std::tie(w.i, w.j, w.t);
  });

  const std::size_t n = hashes.size();
  const std::size_t dim = d;
  Rng rng(seed);
  std::vector<double> x(n * dim);
  for (double& v : x) v = rng.Uniform(-options.init_range, options.init_range);
  std::vector<double> m(n * dim, 0.0), v2(n * dim, 0.0), grad(n * dim, 0.0);
  std::vector<std::uint8_t> touched(n, 0);
  std::vector<std::size_t> touched_rows;
  std::vector<std::size_t> order(targets.size());
  std::iota(order.begin(), order.end(), 0);

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::uint64_t step = 0;
  auto full_loss = [&] {
    double s = 0.0;
    for (const auto& t : targets) {
      double dsq = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = x[t.i * dim + k] - x[t.j * dim + k];
        dsq += diff * diff;
      }
      const double r = std::sqrt(dsq) - t.t;
      s += r * r;
    }
    return s / static_cast<double>(targets.size());
  };

  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const double frac = options.epochs > 1 ? static_cast<double>(epoch) / (options.epochs - 1) : 1.0;
    const double lr = options.learning_rate * (1.0 - (1.0 - options.final_lr_fraction) * frac);
    rng.Shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const double scale = 2.0 / static_cast<double>(end - start);
      for (std::size_t b = start; b < end; ++b) {
        const Sample& t = targets[order[b]];
        double dsq = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          const double diff = x[t.i * dim + k] - x[t.j * dim + k];
          dsq += diff * diff;
        }
        const double dist = std::sqrt(dsq);
        for (std::size_t row : {t.i, t.j}) {
          if (!touched[row]) {
            touched[row] = 1;
            touched_rows.push_back(row);
          }
        }
        if (dist < 1e-12) continue;
        const double coef = scale * (dist - t.t) / dist;
        for (std::size_t k = 0; k < dim; ++k) {
          const double g = coef * (x[t.i * dim + k] - x[t.j * dim + k]);
          grad[t.i * dim + k] += g;
          grad[t.j * dim + k] -= g;
        }
      }
      ++step;
      const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      // Rows are visited in index order so the update is order-independent.
      std::sort(touched_rows.begin(), touched_rows.end());
      for (std::size_t row : touched_rows) {
        for (std::size_t k = 0; k < dim; ++k) {
          const std::size_t q = row * dim + k;
          m[q] = kBeta1 * m[q] + (1.0 - kBeta1) * grad[q];
          v2[q] = kBeta2 * v2[q] + (1.0 - kBeta2) * grad[q] * grad[q];
          x[q] -= lr * (m[q] / bc1) / (std::sqrt(v2[q] / bc2) + kEps);
          grad[q] = 0.0;
        }
        touched[row] = 0;
      }
      touched_rows.clear();
    }
    const double loss = full_loss();
    if (!std::isfinite(loss)) {
      throw DivergenceError("embedding loss became non-finite at epoch " + std::to_string(epoch));
    }
    result.loss_trace.push_back(loss);
  }
  if (options.epochs == 0) result.loss_trace.push_back(full_loss());

  EmbeddingTable table(d);
  for (std::size_t i = 0; i < n; ++i) {
    table.Add(hashes[i], std::span<const double>(x.data() + i * dim, dim));
  }
  table.seed = seed;
  table.epochs = options.epochs;
  table.final_loss = result.loss_trace.back();
  result.table = std::move(table);
  return result;
}

double NormalizeGed(const EmbeddingResult& result, double ged) {
  return (ged - result.ged_min) / (result.ged_max - result.ged_min);
}

int KneeSelectDim(std::span<const int> candidates, std::span<const double> errors) {
  if (candidates.size() < 3) throw InvalidArgumentError("knee detection needs at least three candidates");
  if (candidates.size() != errors.size()) {
    throw InvalidArgumentError("candidate and error lists differ in length");
  }
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i] <= candidates[i - 1]) {
      throw InvalidArgumentError("knee candidates must be strictly ascending");
    }
  }
  const double x0 = candidates.front(), y0 = errors.front();
  const double dx = candidates.back() - x0, dy = errors.back() - y0;
  const double norm = std::hypot(dx, dy);
  std::vector<double> dist(candidates.size(), 0.0);
  double scale = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double px = candidates[i] - x0, py = errors[i] - y0;
    dist[i] = norm > 0.0 ? std::abs(dx * py - dy * px) / norm : 0.0;
    scale = std::max({scale, std::abs(px), std::abs(py)});
  }
  // Distances within rounding of each other count as ties.
  const double tol = 1e-9 * std::max(scale, 1.0);
  std::size_t best = 1;
  for (std::size_t i = 2; i + 1 < candidates.size(); ++i) {
    if (dist[i] > dist[best] + tol) best = i;
  }
  return candidates[best];
}

std::vector<Neighbor> Knn(const EmbeddingTable& table, const GraphHash& query, std::size_t k) {
  const std::size_t q = table.IndexOf(query);
  if (table.size() == 0 || k > table.size() - 1) {
    throw InvalidArgumentError("k exceeds the number of other table entries");
  }
  std::vector<Neighbor> all;
  all.reserve(table.size() - 1);
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (i == q) continue;
    all.push_back({table.hashes()[i], table.Distance(q, i)});
  }
  auto less = [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.hash < b.hash;
  };
  std::partial_sort(all.begin(), all.begin() + k, all.end(), less);
  all.resize(k);
  return all;
}

}  // namespace hetnas
