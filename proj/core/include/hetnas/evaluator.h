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

#ifndef HETNAS_EVALUATOR_H_
#define HETNAS_EVALUATOR_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "hetnas/design_space.h"
#include "hetnas/embedder.h"
#include "hetnas/graph.h"
#include "hetnas/records.h"
#include "json.hpp"

namespace hetnas {

struct TransferHint {
  GraphHash neighbor;
  double overlap = 0.0;  // biased-overlap fraction in [0, 1]

  bool operator==(const TransferHint&) const = default;
};

struct EvaluationRequest {
  GraphHash hash;
  ModelCard card;
  std::vector<double> embedding;
  std::optional<TransferHint> transfer;
  std::uint64_t seed = 0;
};

struct EvaluationResult {
  GraphHash hash;
  std::optional<double> score;  // in [0, 1]; absent on failure
  double cost = 0.0;            // abstract train-time units
  ScoreSource source = ScoreSource::kSynthetic;
  std::optional<std::string> failure;

  bool ok() const { return score.has_value(); }
  static EvaluationResult Failure(GraphHash hash, std::string message);
};

// One JSON object per line:
//   request {hash, card, embedding, transfer_hint: {neighbor_hash,
//            overlap_fraction} | null, seed}
//   result  {hash, score | null, cost, source, failure | null}
nlohmann::json RequestToJson(const EvaluationRequest& request);
EvaluationRequest RequestFromJson(const nlohmann::json& j);
nlohmann::json ResultToJson(const EvaluationResult& result);
// Throws FormatError when the object violates the schema (including both or
// neither of score and failure).
EvaluationResult ResultFromJson(const nlohmann::json& j);

struct Overlap {
  int count = 0;
  double fraction = 0.0;
};

// Leading layers whose full (o, n, h, f, p) tuples agree, counted from the
// input and stopped at the first mismatch; fraction = count / l_q.
Overlap BiasedOverlap(const ModelCard& q, const ModelCard& n);

struct RankedNeighbor {
  GraphHash hash;
  int overlap = 0;
  double fraction = 0.0;
  double distance = 0.0;
};

// Orders k-NN results by biased overlap (descending), then embedding
// distance (ascending), then hash. Neighbors missing from `library` throw
// UnknownHashError.
std::vector<RankedNeighbor> RankNeighbors(const ModelCard& q, const std::vector<Neighbor>& knn,
                                          const GraphLibrary& library);

inline constexpr double kDefaultOverlapThreshold = 0.8;

// First trained neighbor in rank order whose fraction reaches `tau`.
std::optional<TransferHint> ChooseTransfer(
    const std::vector<RankedNeighbor>& ranked,
    const std::unordered_set<GraphHash, GraphHashHasher>& trained,
    double tau = kDefaultOverlapThreshold);

// Performance oracle. Implementations are safe for concurrent Evaluate calls.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual EvaluationResult Evaluate(const EvaluationRequest& request) = 0;
  virtual std::string kind() const = 0;
};

// Cost reduction applied when a transfer hint is honored.
inline constexpr double kTransferCostFactor = 0.5;

// Abstract training cost of a card: encoder parameters in millions.
double TrainingCost(const ModelCard& card);

struct SyntheticOracleParams {
  // Standard deviation multiplier of the heteroscedastic noise.
  double noise_scale = 0.005;
  // Weight of the optional smooth embedding-dependent term.
  double embedding_weight = 0.0;

  nlohmann::json ToJson() const;
  static SyntheticOracleParams FromJson(const nlohmann::json& j);
};

// Stand-in for downstream evaluation.
//
//   base(card) = 0.55 + 0.02 [l = 4] + (1/l) sum_j term(j, t_j)
//
// with normalized depth t_j = j / (l - 1). Each layer's term is
//
//   op:      SA-SDP 0.020, SA-WMA 0.025, DSC-5 0.012, DSC-9 0.016,
//            LT-DFT 0.010 + 0.025 t, LT-DCT 0.005 + 0.060 t
//   width:   t (0.015 [n = 4] + 0.015 [h = 128]) + (1 - t) 0.010 [h = 256]
//   ff:      t (0.020 [max f = 1024] + 0.010 [|f| = 1] - 0.005 [|f| = 3])
//            + (1 - t) 0.008 [|f| = 3]
//
// so DCT deeper in the network, more heads with a smaller hidden size
// deeper, and wide shallow feed-forward stacks deeper all score higher.
// With embedding_weight w the embedding adds w sin(sum_k x_k).
//
// sigma_noise(card) = noise_scale (1 + fraction of SA layers)
// score = clamp01(base + sigma_noise * N(0, 1)), the normal drawn from a
// stream seeded by (request.seed, hash).
class SyntheticOracle : public Oracle {
 public:
  explicit SyntheticOracle(SyntheticOracleParams params = {}) : params_(params) {}

  EvaluationResult Evaluate(const EvaluationRequest& request) override;
  std::string kind() const override { return "synthetic"; }

  double Base(const ModelCard& card, std::span<const double> embedding = {}) const;
  double NoiseSigma(const ModelCard& card) const;
  const SyntheticOracleParams& params() const { return params_; }

 private:
  SyntheticOracleParams params_;
};

// Scores recorded in a JSONL ledger of {hash, score[, cost]} records. A
// record {"default": x} supplies the score for hashes not listed;
// otherwise unknown hashes give a failure result. Later duplicates win.
class ReplayOracle : public Oracle {
 public:
  static ReplayOracle Load(std::istream& in);
  static ReplayOracle LoadFile(const std::string& path);

  EvaluationResult Evaluate(const EvaluationRequest& request) override;
  std::string kind() const override { return "replay"; }

  std::size_t size() const { return scores_.size(); }
  std::optional<double> default_score() const { return default_; }

 private:
  struct Entry {
    double score;
    double cost;
  };
  std::map<GraphHash, Entry> scores_;
  std::optional<double> default_;
};

struct OracleSpec {
  std::string kind = "synthetic";  // synthetic | replay | external
  SyntheticOracleParams synthetic;
  std::string replay_path;
  // External: a shell command (subprocess) or an http:// URL.
  std::string endpoint;
  double timeout_seconds = 3600.0;
  int workers = 1;

  nlohmann::json ToJson() const;
  static OracleSpec FromJson(const nlohmann::json& j);
};

std::unique_ptr<Oracle> MakeOracle(const OracleSpec& spec);

}  // namespace hetnas

#endif  // HETNAS_EVALUATOR_H_
