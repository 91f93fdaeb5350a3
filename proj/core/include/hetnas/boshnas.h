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

#ifndef HETNAS_BOSHNAS_H_
#define HETNAS_BOSHNAS_H_

#include <cstdint>
#include <deque>
#include <future>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "hetnas/design_space.h"
#include "hetnas/embedder.h"
#include "hetnas/evaluator.h"
#include "hetnas/graph.h"
#include "hetnas/records.h"
#include "hetnas/rng.h"
#include "hetnas/surrogate.h"
#include "json.hpp"

namespace hetnas {

struct SearchConfig {
  double alpha = 0.1;  // uncertainty sampling probability
  double beta = 0.1;   // diversity sampling probability
  double k1 = 0.5;
  double k2 = 0.5;
  double tau = kDefaultOverlapThreshold;
  double convergence_eps = 1e-4;
  int convergence_window = 5;
  int gobi_restarts = 16;
  double gobi_lr = 0.05;
  int gobi_max_iters = 200;
  double gobi_tol = 1e-6;
  std::size_t knn_k = 100;
  // Dispatches (seeds included) after which the search stops; 0 = no cap.
  std::size_t max_evaluations = 0;
  int workers = 1;
  // With async, up to `workers` evaluations run concurrently and the oldest
  // is ingested whenever all workers are busy.
  bool async = false;
  std::uint64_t seed = 0;
  SurrogateConfig surrogate;

  std::vector<std::string> Problems() const;
  void CheckValid() const;
  nlohmann::json ToJson() const;
  static SearchConfig FromJson(const nlohmann::json& j);
};

enum class Branch { kSeed, kGobi, kUncertainty, kDiversity, kRandom, kEvolutionary };

std::string_view BranchName(Branch branch);
Branch ParseBranch(std::string_view name);

// One ledger line per dispatched evaluation, written when its result is
// ingested. The wallclock is the cumulative evaluation cost so far.
struct LedgerEntry {
  std::size_t iter = 0;
  GraphHash hash;
  Branch branch = Branch::kSeed;
  std::optional<double> score;
  std::optional<TransferHint> transfer;
  double wallclock = 0.0;
  double cost = 0.0;
  std::int64_t params = 0;
  ScoreSource source = ScoreSource::kSynthetic;
  std::optional<std::string> failure;
};

nlohmann::json LedgerEntryToJson(const LedgerEntry& entry);
LedgerEntry LedgerEntryFromJson(const nlohmann::json& j);
void WriteLedger(std::ostream& out, const std::vector<LedgerEntry>& ledger);
std::vector<LedgerEntry> ReadLedger(std::istream& in);

// The searchable set: candidates are the table's rows, each of which must
// name a library entry.
struct SearchSpace {
  const GraphLibrary* library = nullptr;
  const EmbeddingTable* table = nullptr;
  DesignSpaceConfig config;
  HierarchyLevel level;
};

struct GobiOptions {
  int restarts = 16;
  double lr = 0.05;
  double eps = 1e-8;
  int max_iters = 200;
  double tol = 1e-6;
  double k1 = 0.5;
  double k2 = 0.5;
  int probes = 8;
};

struct GobiResult {
  std::size_t index = 0;             // chosen table row
  std::vector<double> x;             // best converged point
  double ucb = 0.0;                  // UCB at x
  std::vector<std::size_t> snapped;  // per-restart nearest allowed rows
  int converged = 0;                 // restarts that met the tolerance
};

// Second-order UCB ascent from `restarts` random table rows:
//   x <- clip(x + lr g / (|diag H| + eps))
// with g and diag H from the surrogate (Hutchinson), clipped to the table's
// bounding box. The best final point by UCB is snapped to the nearest row
// with allowed[row]. Throws InvalidArgumentError when no row is allowed.
GobiResult GobiQuery(const Surrogate& surrogate, const EmbeddingTable& table,
                     const std::vector<bool>& allowed, const GobiOptions& options, Rng& rng);

struct SearchResult {
  std::optional<GraphHash> best_hash;
  std::optional<ModelCard> best_card;
  double best_score = 0.0;
  std::vector<LedgerEntry> ledger;
  std::size_t evaluations = 0;
  bool converged = false;
  bool exhausted = false;
};

// The coordinator of one search. Owns the corpus, the surrogate and the
// dispatch queue; the oracle may be shared across searches.
class Search {
 public:
  Search(SearchSpace space, SearchConfig config, Oracle& oracle);

  // Dispatches the cards that belong to the space with branch "seed";
  // others are skipped. Returns the number dispatched.
  std::size_t AddSeeds(const std::vector<ModelCard>& seeds);

  // One iteration: draws the branch, picks an untrained candidate and
  // dispatches it. Returns the dispatched hash, or nullopt when every
  // candidate has been dispatched.
  std::optional<GraphHash> Step();

  // Seeds, then steps until convergence, exhaustion or max_evaluations.
  SearchResult Run(const std::vector<ModelCard>& seeds);

  // Ingests every pending job.
  void Drain();

  bool Converged() const;
  bool Exhausted() const { return dispatched_.size() == candidates_.size(); }
  SearchResult Result() const;

  // Refits the surrogate when the corpus changed since the last fit.
  // Returns false when the corpus is still too small to fit.
  bool EnsureFitted();

  // Branch for a uniform draw u.
  Branch BranchFor(double u) const;
  // Untrained row maximizing k1 sigma + k2 xi_hat (smallest hash on ties).
  std::size_t UncertaintyArgmax() const;

  const std::vector<EvaluationRecord>& corpus() const { return corpus_; }
  const std::vector<LedgerEntry>& ledger() const { return ledger_; }
  const std::vector<double>& best_history() const { return best_history_; }
  const Surrogate& surrogate() const { return surrogate_; }
  bool IsDispatched(const GraphHash& hash) const { return dispatched_.contains(hash); }
  std::size_t dispatched() const { return dispatched_.size(); }
  std::size_t pending() const { return jobs_.size(); }
  const SearchConfig& config() const { return config_; }

 private:
  struct Job {
    LedgerEntry entry;
    std::future<EvaluationResult> future;
  };

  std::size_t PickUniformUntrained();
  std::optional<TransferHint> ResolveTransfer(const GraphHash& hash) const;
  void Dispatch(std::size_t row, Branch branch, bool with_transfer);
  void IngestOldest();
  void Ingest(LedgerEntry entry, const EvaluationResult& result);
  std::vector<bool> UntrainedMask() const;

  SearchSpace space_;
  SearchConfig config_;
  Oracle& oracle_;
  Rng rng_;
  Surrogate surrogate_;
  std::vector<std::size_t> candidates_;  // table row -> library index
  std::unordered_set<GraphHash, GraphHashHasher> dispatched_;
  std::unordered_set<GraphHash, GraphHashHasher> trained_;  // ingested successes
  std::vector<EvaluationRecord> corpus_;
  std::vector<LedgerEntry> ledger_;
  std::vector<double> best_history_;
  std::optional<GraphHash> best_hash_;
  double best_score_ = 0.0;
  int stable_ = 0;
  std::size_t iter_ = 0;
  std::size_t fitted_size_ = 0;
  double wallclock_ = 0.0;
  std::deque<Job> jobs_;
};

enum class BaselineKind { kRandom, kEvolutionary };

struct EvolutionOptions {
  std::size_t population = 20;
  std::size_t elite = 5;
  double crossover_rate = 0.5;
  int max_attempts = 100;
};

// Random search (uniform without replacement) or an elitist evolutionary
// search over stack-level mutation and crossover, each for at most `budget`
// evaluations over the space's candidates.
SearchResult BaselineSearch(BaselineKind kind, const SearchSpace& space, std::size_t budget,
                            Oracle& oracle, std::uint64_t seed,
                            const EvolutionOptions& evolution = {});

}  // namespace hetnas

#endif  // HETNAS_BOSHNAS_H_
