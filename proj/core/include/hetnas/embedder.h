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

#ifndef HETNAS_EMBEDDER_H_
#define HETNAS_EMBEDDER_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "hetnas/ged.h"
#include "hetnas/graph.h"

namespace hetnas {

// Dense vectors whose Euclidean distances approximate GED.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(int d) : d_(d) {}

  int dim() const { return d_; }
  std::size_t size() const { return hashes_.size(); }
  bool empty() const { return hashes_.empty(); }

  // Hashes in insertion order; index i owns row i.
  const std::vector<GraphHash>& hashes() const { return hashes_; }
  std::span<const double> Row(std::size_t i) const {
    return {data_.data() + i * d_, static_cast<std::size_t>(d_)};
  }
  std::span<const double> Vector(const GraphHash& hash) const { return Row(IndexOf(hash)); }
  std::size_t IndexOf(const GraphHash& hash) const;
  bool Contains(const GraphHash& hash) const { return index_.contains(hash); }

  void Add(const GraphHash& hash, std::span<const double> vec);
  double Distance(std::size_t i, std::size_t j) const;

  // Index of the row nearest to `x`; ties go to the smaller hash. With a
  // non-empty `allowed` mask only rows with allowed[i] are candidates.
  std::size_t Nearest(std::span<const double> x, const std::vector<bool>* allowed = nullptr) const;

  // Training metadata.
  std::uint64_t seed = 0;
  int epochs = 0;
  double final_loss = 0.0;

  // {d, seed, epochs, final_loss, vectors: {hash: [..]}}
  void WriteJson(std::ostream& out) const;
  static EmbeddingTable ReadJson(std::istream& in);

 private:
  int d_ = 0;
  std::vector<GraphHash> hashes_;
  std::vector<double> data_;
  std::map<GraphHash, std::size_t> index_;
};

struct EmbeddingOptions {
  int epochs = 500;
  std::size_t batch_size = 1024;
  double learning_rate = 0.01;
  // Linear decay of the step size to this fraction at the last epoch.
  double final_lr_fraction = 0.05;
  double init_range = 0.1;
  // Min-max normalization of targets over the training pairs.
  bool normalize = true;
};

struct EmbeddingResult {
  EmbeddingTable table;
  std::vector<double> loss_trace;  // mean squared error after each epoch
  double ged_min = 0.0;            // normalization constants
  double ged_max = 1.0;
};

// Minimizes sum (|x_i - x_j| - GED_ij)^2 with mini-batched Adam. Vectors
// start i.i.d. uniform in [-init, init]. Hashes are ordered
// lexicographically, so the table is byte-identical for identical pairs and
// seed. Throws InvalidArgumentError without pairs, DivergenceError on a
// non-finite loss.
EmbeddingResult TrainEmbeddings(const std::vector<DistancePair>& pairs, int d,
                                std::uint64_t seed, const EmbeddingOptions& options = {});

// Applies the normalization of a training run to a raw GED value.
double NormalizeGed(const EmbeddingResult& result, double ged);

inline constexpr int kDefaultEmbeddingDim = 16;

// Candidate with the largest perpendicular distance to the chord between the
// first and last points of the error curve; ties go to the smaller d.
// Throws InvalidArgumentError for fewer than three candidates.
int KneeSelectDim(std::span<const int> candidates, std::span<const double> errors);

struct Neighbor {
  GraphHash hash;
  double distance = 0.0;
};

// k nearest rows by Euclidean distance, ascending with hash tiebreak; the
// query is excluded. Throws UnknownHashError / InvalidArgumentError.
std::vector<Neighbor> Knn(const EmbeddingTable& table, const GraphHash& query, std::size_t k);

}  // namespace hetnas

#endif  // HETNAS_EMBEDDER_H_
