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

#include "hetnas/evaluator.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>

#include "hetnas/encoder_sim.h"
#include "hetnas/error.h"
#include "hetnas/external_oracle.h"
#include "hetnas/rng.h"

namespace hetnas {

using nlohmann::json;

EvaluationResult EvaluationResult::Failure(GraphHash hash, std::string message) {
  EvaluationResult r;
  r.hash = std::move(hash);
  r.failure = std::move(message);
  return r;
}

json RequestToJson(const EvaluationRequest& request) {
  json j = {{"hash", request.hash.hex},
            {"card", CardToJson(request.card)},
            {"embedding", request.embedding},
            {"seed", request.seed}};
  if (request.transfer) {
    j["transfer_hint"] = {{"neighbor_hash", request.transfer->neighbor.hex},
                          {"overlap_fraction", request.transfer->overlap}};
  } else {
    j["transfer_hint"] = nullptr;
  }
  return j;
}

EvaluationRequest RequestFromJson(const json& j) {
  try {
    EvaluationRequest r;
    r.hash = GraphHash{j.at("hash").get<std::string>()};
    r.card = CardFromJson(j.at("card"));
    r.embedding = j.value("embedding", std::vector<double>{});
    r.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("transfer_hint") && !j.at("transfer_hint").is_null()) {
      const auto& t = j.at("transfer_hint");
      TransferHint hint{GraphHash{t.at("neighbor_hash").get<std::string>()},
                        t.at("overlap_fraction").get<double>()};
      if (!(hint.overlap >= 0.0 && hint.overlap <= 1.0)) {
        throw FormatError("overlap_fraction outside [0, 1]");
      }
      r.transfer = std::move(hint);
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed evaluation request: ") + e.what());
  }
}

json ResultToJson(const EvaluationResult& result) {
  json j = {{"hash", result.hash.hex},
            {"cost", result.cost},
            {"source", std::string(ScoreSourceName(result.source))}};
  j["score"] = result.score ? json(*result.score) : json(nullptr);
  j["failure"] = result.failure ? json(*result.failure) : json(nullptr);
  return j;
}

EvaluationResult ResultFromJson(const json& j) {
  if (!j.is_object()) throw FormatError("evaluation result must be a JSON object");
  try {
    EvaluationResult r;
    r.hash = GraphHash{j.at("hash").get<std::string>()};
    r.cost = j.value("cost", 0.0);
    if (j.contains("source") && !j.at("source").is_null()) {
      r.source = ParseScoreSource(j.at("source").get<std::string>());
    }
    const bool has_score = j.contains("score") && !j.at("score").is_null();
    const bool has_failure = j.contains("failure") && !j.at("failure").is_null();
    if (has_score == has_failure) {
      throw FormatError("evaluation result needs exactly one of score and failure");
    }
    if (has_score) {
      const double s = j.at("score").get<double>();
      if (!(s >= 0.0 && s <= 1.0)) throw FormatError("score outside [0, 1]");
      r.score = s;
    } else {
      r.failure = j.at("failure").get<std::string>();
    }
    if (!std::isfinite(r.cost) || r.cost < 0.0) throw FormatError("invalid cost");
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed evaluation result: ") + e.what());
  }
}

Overlap BiasedOverlap(const ModelCard& q, const ModelCard& n) {
  Overlap out;
  const int depth = std::min(q.l, n.l);
  while (out.count < depth && q.Layer(out.count) == n.Layer(out.count)) ++out.count;
  out.fraction = q.l > 0 ? static_cast<double>(out.count) / q.l : 0.0;
  return out;
}

std::vector<RankedNeighbor> RankNeighbors(const ModelCard& q, const std::vector<Neighbor>& knn,
                                          const GraphLibrary& library) {
  std::vector<RankedNeighbor> out;
  out.reserve(knn.size());
  for (const auto& nb : knn) {
    const Overlap ov = BiasedOverlap(q, library.Find(nb.hash).card);
    out.push_back({nb.hash, ov.count, ov.fraction, nb.distance});
  }
  std::sort(out.begin(), out.end(), [](const RankedNeighbor& a, const RankedNeighbor& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.hash < b.hash;
  });
  return out;
}

std::optional<TransferHint> ChooseTransfer(
    const std::vector<RankedNeighbor>& ranked,
    const std::unordered_set<GraphHash, GraphHashHasher>& trained, double tau) {
  for (const auto& r : ranked) {
    if (trained.contains(r.hash) && r.fraction >= tau) return TransferHint{r.hash, r.fraction};
  }
  return std::nullopt;
}

double TrainingCost(const ModelCard& card) {
  return static_cast<double>(ParamCount(card, false)) / 1e6;
}

json SyntheticOracleParams::ToJson() const {
  return {{"noise_scale", noise_scale}, {"embedding_weight", embedding_weight}};
}

SyntheticOracleParams SyntheticOracleParams::FromJson(const json& j) {
  SyntheticOracleParams p;
  p.noise_scale = j.value("noise_scale", p.noise_scale);
  p.embedding_weight = j.value("embedding_weight", p.embedding_weight);
  if (!(p.noise_scale >= 0.0)) throw FormatError("noise_scale must be nonnegative");
  return p;
}

double SyntheticOracle::Base(const ModelCard& card, std::span<const double> embedding) const {
  double sum = 0.0;
  for (int j = 0; j < card.l; ++j) {
    const double t = card.l > 1 ? static_cast<double>(j) / (card.l - 1) : 1.0;
    const std::string& p = card.p[j];
    switch (card.o[j]) {
      case OpKind::kSA:
        sum += p == "WMA" ? 0.025 : 0.020;
        break;
      case OpKind::kDSC:
        sum += p == "9" ? 0.016 : 0.012;
        break;
      case OpKind::kLT:
        sum += p == "DCT" ? 0.005 + 0.060 * t : 0.010 + 0.025 * t;
        break;
    }
    sum += t * (0.015 * (card.n[j] == 4) + 0.015 * (card.h[j] == 128)) +
           (1.0 - t) * 0.010 * (card.h[j] == 256);
    const auto& f = card.f[j];
    const int widest = f.empty() ? 0 : *std::max_element(f.begin(), f.end());
    const int depth = static_cast<int>(f.size());
    sum += t * (0.020 * (widest == 1024) + 0.010 * (depth == 1) - 0.005 * (depth == 3)) +
           (1.0 - t) * 0.008 * (depth == 3);
  }
  double base = 0.55 + 0.02 * (card.l == 4) + (card.l > 0 ? sum / card.l : 0.0);
  if (params_.embedding_weight != 0.0 && !embedding.empty()) {
    double s = 0.0;
    for (double v : embedding) s += v;
    base += params_.embedding_weight * std::sin(s);
  }
  return base;
}

double SyntheticOracle::NoiseSigma(const ModelCard& card) const {
  int sa = 0;
  for (OpKind op : card.o) sa += op == OpKind::kSA;
  const double frac = card.l > 0 ? static_cast<double>(sa) / card.l : 0.0;
  return params_.noise_scale * (1.0 + frac);
}

EvaluationResult SyntheticOracle::Evaluate(const EvaluationRequest& request) {
  const auto problems = StructuralProblems(request.card);
  if (!problems.empty()) return EvaluationResult::Failure(request.hash, problems.front());
  Rng rng(MixSeed(request.seed, StringSeed(request.hash.hex)));
  const double noise = NoiseSigma(request.card) * rng.Normal();
  EvaluationResult r;
  r.hash = request.hash;
  r.score = std::clamp(Base(request.card, request.embedding) + noise, 0.0, 1.0);
  r.source = ScoreSource::kSynthetic;
  r.cost = TrainingCost(request.card) * (request.transfer ? kTransferCostFactor : 1.0);
  return r;
}

ReplayOracle ReplayOracle::Load(std::istream& in) {
  ReplayOracle oracle;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json rec = json::parse(line);
      if (rec.contains("default")) {
        const double d = rec.at("default").get<double>();
        if (!(d >= 0.0 && d <= 1.0)) throw FormatError("default score outside [0, 1]");
        oracle.default_ = d;
        continue;
      }
      const double s = rec.at("score").get<double>();
      if (!(s >= 0.0 && s <= 1.0)) throw FormatError("score outside [0, 1]");
      const double cost = rec.value("cost", 1.0);
      oracle.scores_[GraphHash{rec.at("hash").get<std::string>()}] = Entry{s, cost};
    } catch (const json::exception& e) {
      throw FormatError("replay ledger line " + std::to_string(lineno) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("replay ledger line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return oracle;
}

ReplayOracle ReplayOracle::LoadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open replay ledger: " + path);
  return Load(in);
}

EvaluationResult ReplayOracle::Evaluate(const EvaluationRequest& request) {
  EvaluationResult r;
  r.hash = request.hash;
  r.source = ScoreSource::kReplay;
  auto it = scores_.find(request.hash);
  if (it != scores_.end()) {
    r.score = it->second.score;
    r.cost = it->second.cost;
  } else if (default_) {
    r.score = *default_;
    r.cost = 1.0;
  } else {
    return EvaluationResult::Failure(request.hash, "hash not in replay ledger");
  }
  if (request.transfer) r.cost *= kTransferCostFactor;
  return r;
}

json OracleSpec::ToJson() const {
  return {{"kind", kind},
          {"synthetic", synthetic.ToJson()},
          {"replay_path", replay_path},
          {"endpoint", endpoint},
          {"timeout_seconds", timeout_seconds},
          {"workers", workers}};
}

OracleSpec OracleSpec::FromJson(const json& j) {
  OracleSpec s;
  s.kind = j.value("kind", s.kind);
  if (j.contains("synthetic")) s.synthetic = SyntheticOracleParams::FromJson(j.at("synthetic"));
  s.replay_path = j.value("replay_path", s.replay_path);
  s.endpoint = j.value("endpoint", s.endpoint);
  s.timeout_seconds = j.value("timeout_seconds", s.timeout_seconds);
  s.workers = j.value("workers", s.workers);
  return s;
}

std::unique_ptr<Oracle> MakeOracle(const OracleSpec& spec) {
  if (spec.kind == "synthetic") return std::make_unique<SyntheticOracle>(spec.synthetic);
  if (spec.kind == "replay") {
    if (spec.replay_path.empty()) throw InvalidArgumentError("replay oracle needs a ledger path");
    return std::make_unique<ReplayOracle>(ReplayOracle::LoadFile(spec.replay_path));
  }
  if (spec.kind == "external") {
    if (spec.endpoint.empty()) throw InvalidArgumentError("external oracle needs an endpoint");
    ExternalOracleOptions opts;
    opts.endpoint = spec.endpoint;
    opts.timeout_seconds = spec.timeout_seconds;
    opts.workers = std::max(1, spec.workers);
    return std::make_unique<ExternalOracle>(opts);
  }
  throw InvalidArgumentError("unknown oracle kind: " + spec.kind);
}

}  // namespace hetnas
