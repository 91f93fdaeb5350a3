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

#include "hetnas/boshnas.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "hetnas/encoder_sim.h"
#include "hetnas/error.h"

namespace hetnas {

using nlohmann::json;

namespace {

EvaluationResult SafeEvaluate(Oracle& oracle, const EvaluationRequest& request) {
  try {
    EvaluationResult r = oracle.Evaluate(request);
    if (r.hash != request.hash) {
      return EvaluationResult::Failure(request.hash, "oracle answered for a different hash");
    }
    return r;
  } catch (const std::exception& e) {
    return EvaluationResult::Failure(request.hash, e.what());
  }
}

std::vector<double> ToVector(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

std::vector<std::string> SearchConfig::Problems() const {
  std::vector<std::string> out;
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(alpha)) out.push_back("alpha must lie in [0, 1]");
  if (!prob(beta)) out.push_back("beta must lie in [0, 1]");
  if (alpha + beta > 1.0 + 1e-12) out.push_back("alpha + beta must not exceed 1");
  if (!prob(tau)) out.push_back("tau must lie in [0, 1]");
  if (!(convergence_eps >= 0.0)) out.push_back("convergence_eps must be nonnegative");
  if (convergence_window < 1) out.push_back("convergence_window must be positive");
  if (gobi_restarts < 1) out.push_back("gobi_restarts must be positive");
  if (!(gobi_lr > 0.0)) out.push_back("gobi_lr must be positive");
  if (gobi_max_iters < 0) out.push_back("gobi_max_iters must be nonnegative");
  if (knn_k < 1) out.push_back("knn_k must be positive");
  if (workers < 1) out.push_back("workers must be positive");
  return out;
}

void SearchConfig::CheckValid() const {
  const auto problems = Problems();
  if (!problems.empty()) throw InvalidArgumentError("invalid search config: " + problems.front());
}

json SearchConfig::ToJson() const {
  return {{"alpha", alpha},
          {"beta", beta},
          {"k1", k1},
          {"k2", k2},
          {"tau", tau},
          {"convergence_eps", convergence_eps},
          {"convergence_window", convergence_window},
          {"gobi_restarts", gobi_restarts},
          {"gobi_lr", gobi_lr},
          {"gobi_max_iters", gobi_max_iters},
          {"gobi_tol", gobi_tol},
          {"knn_k", knn_k},
          {"max_evaluations", max_evaluations},
          {"workers", workers},
          {"async", async},
          {"seed", seed},
          {"surrogate", SurrogateConfigToJson(surrogate)}};
}

SearchConfig SearchConfig::FromJson(const json& j) {
  try {
    SearchConfig c;
    c.alpha = j.value("alpha", c.alpha);
    c.beta = j.value("beta", c.beta);
    c.k1 = j.value("k1", c.k1);
    c.k2 = j.value("k2", c.k2);
    c.tau = j.value("tau", c.tau);
    c.convergence_eps = j.value("convergence_eps", c.convergence_eps);
    c.convergence_window = j.value("convergence_window", c.convergence_window);
    c.gobi_restarts = j.value("gobi_restarts", c.gobi_restarts);
    c.gobi_lr = j.value("gobi_lr", c.gobi_lr);
    c.gobi_max_iters = j.value("gobi_max_iters", c.gobi_max_iters);
    c.gobi_tol = j.value("gobi_tol", c.gobi_tol);
    c.knn_k = j.value("knn_k", c.knn_k);
    c.max_evaluations = j.value("max_evaluations", c.max_evaluations);
    c.workers = j.value("workers", c.workers);
    c.async = j.value("async", c.async);
    c.seed = j.value("seed", c.seed);
    if (j.contains("surrogate")) c.surrogate = SurrogateConfigFromJson(j.at("surrogate"));
    c.CheckValid();
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed search config: ") + e.what());
  }
}

std::string_view BranchName(Branch branch) {
  switch (branch) {
    case Branch::kSeed: return "seed";
    case Branch::kGobi: return "gobi";
    case Branch::kUncertainty: return "uncertainty";
    case Branch::kDiversity: return "diversity";
    case Branch::kRandom: return "random";
    case Branch::kEvolutionary: return "evolutionary";
  }
  return "seed";
}

Branch ParseBranch(std::string_view name) {
  for (Branch b : {Branch::kSeed, Branch::kGobi, Branch::kUncertainty, Branch::kDiversity,
                   Branch::kRandom, Branch::kEvolutionary}) {
    if (BranchName(b) == name) return b;
  }
  throw FormatError("unknown branch: " + std::string(name));
}

json LedgerEntryToJson(const LedgerEntry& e) {
  json j = {{"iter", e.iter},
            {"hash", e.hash.hex},
            {"branch", std::string(BranchName(e.branch))},
            {"wallclock", e.wallclock},
            {"cost", e.cost},
            {"params", e.params},
            {"source", std::string(ScoreSourceName(e.source))}};
  j["score"] = e.score ? json(*e.score) : json(nullptr);
  j["transfer"] = e.transfer ? json{{"neighbor", e.transfer->neighbor.hex},
                                    {"overlap", e.transfer->overlap}}
                             : json(nullptr);
  j["failure"] = e.failure ? json(*e.failure) : json(nullptr);
  return j;
}

LedgerEntry LedgerEntryFromJson(const json& j) {
  try {
    LedgerEntry e;
    e.iter = j.at("iter").get<std::size_t>();
    e.hash = GraphHash{j.at("hash").get<std::string>()};
    e.branch = ParseBranch(j.at("branch").get<std::string>());
    e.wallclock = j.value("wallclock", 0.0);
    e.cost = j.value("cost", 0.0);
    e.params = j.value("params", std::int64_t{0});
    if (j.contains("source")) e.source = ParseScoreSource(j.at("source").get<std::string>());
    if (j.contains("score") && !j.at("score").is_null()) e.score = j.at("score").get<double>();
    if (j.contains("transfer") && !j.at("transfer").is_null()) {
      const auto& t = j.at("transfer");
      e.transfer = TransferHint{GraphHash{t.at("neighbor").get<std::string>()},
                                t.at("overlap").get<double>()};
    }
    if (j.contains("failure") && !j.at("failure").is_null()) {
      e.failure = j.at("failure").get<std::string>();
    }
    return e;
  } catch (const json::exception& ex) {
    throw FormatError(std::string("malformed ledger entry: ") + ex.what());
  }
}

void WriteLedger(std::ostream& out, const std::vector<LedgerEntry>& ledger) {
  for (const auto& e : ledger) out << LedgerEntryToJson(e).dump() << '\n';
}

std::vector<LedgerEntry> ReadLedger(std::istream& in) {
  std::vector<LedgerEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(LedgerEntryFromJson(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError("ledger line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

GobiResult GobiQuery(const Surrogate& surrogate, const EmbeddingTable& table,
                     const std::vector<bool>& allowed, const GobiOptions& options, Rng& rng) {
  if (table.empty()) throw InvalidArgumentError("GOBI needs a non-empty table");
  if (allowed.size() != table.size() || std::none_of(allowed.begin(), allowed.end(),
                                                     [](bool a) { return a; })) {
    throw InvalidArgumentError("GOBI needs at least one allowed row");
  }
  const int d = table.dim();
  const int restarts = std::max(1, options.restarts);
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = -lo;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto row = table.Row(i);
    for (int k = 0; k < d; ++k) {
      lo[k] = std::min(lo[k], row[k]);
      hi[k] = std::max(hi[k], row[k]);
    }
  }
  Eigen::MatrixXd x(d, restarts);
  for (int r = 0; r < restarts; ++r) {
    const auto row = table.Row(static_cast<std::size_t>(rng.Below(table.size())));
    for (int k = 0; k < d; ++k) x(k, r) = row[k];
  }
  GobiResult result;
  std::vector<int> active(restarts);
  for (int r = 0; r < restarts; ++r) active[r] = r;
  for (int it = 0; it < options.max_iters && !active.empty(); ++it) {
    Eigen::MatrixXd batch(d, static_cast<Eigen::Index>(active.size()));
    for (std::size_t c = 0; c < active.size(); ++c) batch.col(c) = x.col(active[c]);
    Eigen::VectorXd ucb;
    Eigen::MatrixXd grad, hdiag;
    surrogate.UcbGradient(batch, options.k1, options.k2, options.probes, rng, &ucb, &grad, &hdiag);
    std::vector<int> still;
    for (std::size_t c = 0; c < active.size(); ++c) {
      const Eigen::VectorXd step =
          (options.lr * grad.col(c).array() / (hdiag.col(c).array().abs() + options.eps)).matrix();
      const Eigen::VectorXd next = (x.col(active[c]) + step).cwiseMax(lo).cwiseMin(hi);
      const double moved = (next - x.col(active[c])).norm();
      x.col(active[c]) = next;
      if (moved < options.tol) {
        ++result.converged;
        continue;
      }
      still.push_back(active[c]);
    }
    active = std::move(still);
  }
  int best = 0;
  double best_ucb = -std::numeric_limits<double>::infinity();
  std::vector<double> col(d);
  for (int r = 0; r < restarts; ++r) {
    for (int k = 0; k < d; ++k) col[k] = x(k, r);
    const double u = surrogate.Ucb(col, options.k1, options.k2);
    if (u > best_ucb) {
      best_ucb = u;
      best = r;
    }
    result.snapped.push_back(table.Nearest(col, &allowed));
  }
  result.index = result.snapped[best];
  result.ucb = best_ucb;
  result.x.assign(x.col(best).data(), x.col(best).data() + d);
  return result;
}

Search::Search(SearchSpace space, SearchConfig config, Oracle& oracle)
    : space_(std::move(space)),
      config_(std::move(config)),
      oracle_(oracle),
      rng_(MixSeed(config_.seed, StringSeed("search"))) {
  config_.CheckValid();
  if (space_.library == nullptr || space_.table == nullptr) {
    throw InvalidArgumentError("search needs a library and an embedding table");
  }
  surrogate_ = Surrogate(space_.table->dim(), config_.surrogate,
                         MixSeed(config_.seed, StringSeed("surrogate")));
  candidates_.reserve(space_.table->size());
  for (const auto& hash : space_.table->hashes()) {
    candidates_.push_back(space_.library->IndexOf(hash));
  }
}

std::size_t Search::AddSeeds(const std::vector<ModelCard>& seeds) {
  std::size_t n = 0;
  for (const auto& card : seeds) {
    if (config_.max_evaluations != 0 && dispatched_.size() >= config_.max_evaluations) break;
    if (!StructuralProblems(card).empty()) continue;
    const GraphHash hash = HashCard(card);
    if (!space_.table->Contains(hash) || dispatched_.contains(hash)) continue;
    Dispatch(space_.table->IndexOf(hash), Branch::kSeed, false);
    ++n;
  }
  return n;
}

Branch Search::BranchFor(double u) const {
  if (u < 1.0 - config_.alpha - config_.beta) return Branch::kGobi;
  if (u < 1.0 - config_.beta) return Branch::kUncertainty;
  return Branch::kDiversity;
}

bool Search::EnsureFitted() {
  if (corpus_.size() < 2) return false;
  if (surrogate_.fitted() && fitted_size_ == corpus_.size()) return true;
  double lo = corpus_.front().score, hi = lo;
  for (const auto& r : corpus_) {
    lo = std::min(lo, r.score);
    hi = std::max(hi, r.score);
  }
  const double range = hi > lo ? hi - lo : 1.0;
  std::vector<EvaluationRecord> scaled = corpus_;
  for (auto& r : scaled) r.score = (r.score - lo) / range;
  surrogate_.score_min = lo;
  surrogate_.score_max = lo + range;
  surrogate_.Fit(scaled);
  fitted_size_ = corpus_.size();
  return true;
}

std::vector<bool> Search::UntrainedMask() const {
  const auto& hashes = space_.table->hashes();
  std::vector<bool> mask(hashes.size());
  for (std::size_t i = 0; i < hashes.size(); ++i) mask[i] = !dispatched_.contains(hashes[i]);
  return mask;
}

std::size_t Search::UncertaintyArgmax() const {
  const auto& hashes = space_.table->hashes();
  std::size_t best = hashes.size();
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hashes.size(); ++i) {
    if (dispatched_.contains(hashes[i])) continue;
    const Prediction p = surrogate_.Predict(space_.table->Row(i));
    const double v = config_.k1 * p.sigma + config_.k2 * p.xi_hat;
    if (v > best_value || (v == best_value && hashes[i] < hashes[best])) {
      best_value = v;
      best = i;
    }
  }
  if (best == hashes.size()) throw InvalidArgumentError("no untrained candidates remain");
  return best;
}

std::size_t Search::PickUniformUntrained() {
  std::vector<std::size_t> open;
  const auto& hashes = space_.table->hashes();
  for (std::size_t i = 0; i < hashes.size(); ++i) {
    if (!dispatched_.contains(hashes[i])) open.push_back(i);
  }
  if (open.empty()) throw InvalidArgumentError("no untrained candidates remain");
  return open[static_cast<std::size_t>(rng_.Below(open.size()))];
}

std::optional<TransferHint> Search::ResolveTransfer(const GraphHash& hash) const {
  if (trained_.empty()) return std::nullopt;
  const std::size_t k = std::min(config_.knn_k, space_.table->size() - 1);
  if (k == 0) return std::nullopt;
  const auto knn = Knn(*space_.table, hash, k);
  const auto ranked = RankNeighbors(space_.library->Find(hash).card, knn, *space_.library);
  return ChooseTransfer(ranked, trained_, config_.tau);
}

std::optional<GraphHash> Search::Step() {
  if (Exhausted()) return std::nullopt;
  Branch branch = BranchFor(rng_.Uniform());
  if (branch != Branch::kDiversity && !EnsureFitted()) branch = Branch::kDiversity;
  std::size_t row = 0;
  switch (branch) {
    case Branch::kGobi: {
      GobiOptions opts;
      opts.restarts = config_.gobi_restarts;
      opts.lr = config_.gobi_lr;
      opts.max_iters = config_.gobi_max_iters;
      opts.tol = config_.gobi_tol;
      opts.k1 = config_.k1;
      opts.k2 = config_.k2;
      opts.probes = config_.surrogate.hessian_probes;
      row = GobiQuery(surrogate_, *space_.table, UntrainedMask(), opts, rng_).index;
      break;
    }
    case Branch::kUncertainty:
      row = UncertaintyArgmax();
      break;
    default:
      row = PickUniformUntrained();
      break;
  }
  Dispatch(row, branch, true);
  return space_.table->hashes()[row];
}

void Search::Dispatch(std::size_t row, Branch branch, bool with_transfer) {
  const GraphHash& hash = space_.table->hashes()[row];
  const ModelCard& card = space_.library->at(candidates_[row]).card;
  EvaluationRequest request;
  request.hash = hash;
  request.card = card;
  request.embedding = ToVector(space_.table->Row(row));
  request.seed = config_.seed;
  if (with_transfer) request.transfer = ResolveTransfer(hash);
  dispatched_.insert(hash);

  LedgerEntry entry;
  entry.iter = iter_++;
  entry.hash = hash;
  entry.branch = branch;
  entry.transfer = request.transfer;
  entry.params = ParamCount(card, false);

  if (!config_.async || config_.workers <= 1) {
    Ingest(std::move(entry), SafeEvaluate(oracle_, request));
    return;
  }
  while (jobs_.size() >= static_cast<std::size_t>(config_.workers)) IngestOldest();
  Oracle* oracle = &oracle_;
  jobs_.push_back({std::move(entry), std::async(std::launch::async, [oracle, request] {
                     return SafeEvaluate(*oracle, request);
                   })});
}

void Search::IngestOldest() {
  Job job = std::move(jobs_.front());
  jobs_.pop_front();
  Ingest(std::move(job.entry), job.future.get());
}

void Search::Drain() {
  while (!jobs_.empty()) IngestOldest();
}

void Search::Ingest(LedgerEntry entry, const EvaluationResult& result) {
  wallclock_ += result.cost;
  entry.cost = result.cost;
  entry.wallclock = wallclock_;
  entry.source = result.source;
  entry.score = result.score;
  entry.failure = result.failure;
  if (result.ok()) {
    const double score = *result.score;
    const std::size_t row = space_.table->IndexOf(entry.hash);
    corpus_.push_back({entry.hash, ToVector(space_.table->Row(row)), score, result.source});
    trained_.insert(entry.hash);
    const bool first = !best_hash_.has_value();
    const double previous = best_score_;
    if (first || score > best_score_) {
      best_score_ = score;
      best_hash_ = entry.hash;
    }
    if (!first) stable_ = std::abs(best_score_ - previous) < config_.convergence_eps ? stable_ + 1 : 0;
    best_history_.push_back(best_score_);
  }
  ledger_.push_back(std::move(entry));
}

bool Search::Converged() const { return stable_ >= config_.convergence_window; }

SearchResult Search::Result() const {
  SearchResult r;
  r.best_hash = best_hash_;
  if (best_hash_) r.best_card = space_.library->Find(*best_hash_).card;
  r.best_score = best_score_;
  r.ledger = ledger_;
  r.evaluations = dispatched_.size();
  r.converged = Converged();
  r.exhausted = Exhausted();
  return r;
}

SearchResult Search::Run(const std::vector<ModelCard>& seeds) {
  AddSeeds(seeds);
  auto capped = [&] {
    return config_.max_evaluations != 0 && dispatched_.size() >= config_.max_evaluations;
  };
  while (!Converged() && !Exhausted() && !capped()) {
    Step();
  }
  Drain();
  return Result();
}

namespace {

// Shared bookkeeping of the baseline searches.
class BaselineRunner {
 public:
  BaselineRunner(const SearchSpace& space, Oracle& oracle, std::uint64_t seed)
      : space_(space), oracle_(oracle), seed_(seed) {}

  bool Dispatched(const GraphHash& hash) const { return dispatched_.contains(hash); }
  std::size_t count() const { return dispatched_.size(); }

  void Evaluate(std::size_t row, Branch branch) {
    const GraphHash& hash = space_.table->hashes()[row];
    const ModelCard& card = space_.library->Find(hash).card;
    EvaluationRequest request;
    request.hash = hash;
    request.card = card;
    request.embedding = ToVector(space_.table->Row(row));
    request.seed = seed_;
    dispatched_.insert(hash);
    const EvaluationResult res = SafeEvaluate(oracle_, request);
    wallclock_ += res.cost;
    LedgerEntry e;
    e.iter = result_.ledger.size();
    e.hash = hash;
    e.branch = branch;
    e.score = res.score;
    e.wallclock = wallclock_;
    e.cost = res.cost;
    e.params = ParamCount(card, false);
    e.source = res.source;
    e.failure = res.failure;
    result_.ledger.push_back(e);
    if (res.ok()) {
      scored_.push_back({*res.score, hash});
      if (!result_.best_hash || *res.score > result_.best_score) {
        result_.best_score = *res.score;
        result_.best_hash = hash;
        result_.best_card = card;
      }
    }
  }

  // Successful evaluations ordered by score (descending), then hash.
  std::vector<std::pair<double, GraphHash>> Ranked() const {
    auto out = scored_;
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    return out;
  }

  SearchResult Finish() {
    result_.evaluations = dispatched_.size();
    result_.exhausted = dispatched_.size() == space_.table->size();
    return std::move(result_);
  }

 private:
  const SearchSpace& space_;
  Oracle& oracle_;
  std::uint64_t seed_;
  std::unordered_set<GraphHash, GraphHashHasher> dispatched_;
  std::vector<std::pair<double, GraphHash>> scored_;
  SearchResult result_;
  double wallclock_ = 0.0;
};

std::vector<LayerSpec> Stacks(const ModelCard& card, int stack_size) {
  std::vector<LayerSpec> out;
  for (int j = 0; j < card.l; j += stack_size) out.push_back(card.Layer(j));
  return out;
}

template <typename T>
const T& Pick(const std::vector<T>& items, Rng& rng) {
  return items[static_cast<std::size_t>(rng.Below(items.size()))];
}

void Mutate(std::vector<LayerSpec>& stacks, const DesignSpaceConfig& config, bool hetero_ff,
            Rng& rng) {
  LayerSpec& s = stacks[static_cast<std::size_t>(rng.Below(stacks.size()))];
  switch (rng.Below(4)) {
    case 0:
      s.op = Pick(config.ops, rng);
      s.param = Pick(config.op_params.at(s.op), rng);
      break;
    case 1:
      s.heads = Pick(config.heads, rng);
      break;
    case 2:
      s.hidden = Pick(config.hidden, rng);
      break;
    default: {
      const int depth = Pick(config.ff_stack_depths, rng);
      s.ff.assign(depth, Pick(config.ff_dims, rng));
      if (hetero_ff) {
        for (int& w : s.ff) w = Pick(config.ff_dims, rng);
      }
      break;
    }
  }
}

}  // namespace

SearchResult BaselineSearch(BaselineKind kind, const SearchSpace& space, std::size_t budget,
                            Oracle& oracle, std::uint64_t seed, const EvolutionOptions& evolution) {
  if (space.library == nullptr || space.table == nullptr) {
    throw InvalidArgumentError("baseline search needs a library and an embedding table");
  }
  const EmbeddingTable& table = *space.table;
  budget = std::min(budget, table.size());
  Rng rng(MixSeed(seed, StringSeed(kind == BaselineKind::kRandom ? "random" : "evolutionary")));
  BaselineRunner runner(space, oracle, seed);
  std::vector<std::size_t> order(table.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.Shuffle(std::span<std::size_t>(order));
  std::size_t cursor = 0;
  auto next_random = [&]() -> std::size_t {
    while (runner.Dispatched(table.hashes()[order[cursor]])) ++cursor;
    return order[cursor];
  };

  if (kind == BaselineKind::kRandom) {
    while (runner.count() < budget) runner.Evaluate(next_random(), Branch::kRandom);
    return runner.Finish();
  }

  const int s = space.level.stack_size;
  const bool hetero = space.level.hetero_ff;
  const std::size_t initial = std::min(budget, std::max<std::size_t>(1, evolution.population));
  while (runner.count() < initial) runner.Evaluate(next_random(), Branch::kRandom);
  while (runner.count() < budget) {
    const auto ranked = runner.Ranked();
    if (ranked.empty()) {
      runner.Evaluate(next_random(), Branch::kRandom);
      continue;
    }
    const std::size_t elite = std::min(ranked.size(), std::max<std::size_t>(1, evolution.elite));
    std::optional<std::size_t> child_row;
    for (int attempt = 0; attempt < evolution.max_attempts && !child_row; ++attempt) {
      const auto& a = space.library->Find(ranked[rng.Below(elite)].second).card;
      const auto& b = space.library->Find(ranked[rng.Below(elite)].second).card;
      std::vector<LayerSpec> stacks = Stacks(a, s);
      if (rng.Bernoulli(evolution.crossover_rate)) {
        const auto other = Stacks(b, s);
        for (std::size_t k = 0; k < stacks.size() && k < other.size(); ++k) {
          if (rng.Bernoulli(0.5)) stacks[k] = other[k];
        }
      }
      Mutate(stacks, space.config, hetero, rng);
      const ModelCard child = ExpandStacks(stacks, s);
      if (!StructuralProblems(child).empty()) continue;
      const GraphHash hash = HashCard(child);
      if (table.Contains(hash) && !runner.Dispatched(hash)) child_row = table.IndexOf(hash);
    }
    if (child_row) {
      runner.Evaluate(*child_row, Branch::kEvolutionary);
    } else {
      runner.Evaluate(next_random(), Branch::kRandom);
    }
  }
  return runner.Finish();
}

}  // namespace hetnas
