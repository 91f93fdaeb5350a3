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

// Command-line driver: enumerate, hash, ged, embed, search, simulate, report
// and run (the full level hierarchy).

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hetnas/boshnas.h"
#include "hetnas/design_space.h"
#include "hetnas/embedder.h"
#include "hetnas/encoder_sim.h"
#include "hetnas/error.h"
#include "hetnas/evaluator.h"
#include "hetnas/ged.h"
#include "hetnas/graph.h"
#include "hetnas/hierarchy.h"
#include "hetnas/pipeline.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hetnas {
namespace {

constexpr const char* kWorkersEnv = "HETNAS_WORKERS";

int DefaultWorkers() {
  if (const char* v = std::getenv(kWorkersEnv)) {
    try {
      return std::max(1, std::stoi(v));
    } catch (const std::exception&) {
      throw InvalidArgumentError(std::string(kWorkersEnv) + " is not an integer: " + v);
    }
  }
  return 1;
}

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::ifstream OpenIn(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return in;
}

std::ofstream OpenOut(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

std::map<std::string, ModelCard> Fixtures() {
  return {{"bert-tiny", cards::BertTiny()},
          {"bert-mini", cards::BertMini()},
          {"flexi-mini-s2", cards::FlexiMiniLevel1Best()},
          {"flexi-mini", cards::FlexiMini()},
          {"ablation-no-second-order", cards::AblationNoSecondOrder()},
          {"ablation-no-heteroscedastic", cards::AblationNoHeteroscedastic()}};
}

ModelCard LoadCard(const std::string& card_path, const std::string& fixture) {
  if (!fixture.empty()) {
    const auto all = Fixtures();
    auto it = all.find(fixture);
    if (it == all.end()) throw InvalidArgumentError("unknown fixture card: " + fixture);
    return it->second;
  }
  if (card_path.empty()) throw InvalidArgumentError("a --card file or --fixture is required");
  return CardFromJson(ReadJsonFile(card_path));
}

// Shared flags.
struct Common {
  std::string config;
  int level = 1;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out = ".";

  PipelineConfig Pipeline() const {
    PipelineConfig c = config.empty() ? PipelineConfig{} : PipelineConfig::FromJson(ReadJsonFile(config));
    c.workers = workers > 0 ? workers : (config.empty() ? DefaultWorkers() : c.workers);
    return c;
  }
  HierarchyLevel Level() const { return HierarchyLevel::FromIndex(level); }
};

void AddCommon(CLI::App* app, Common& c, bool with_out = true) {
  app->add_option("--config", c.config, "Pipeline config JSON");
  app->add_option("--level", c.level, "Hierarchy level (1, 2 or 3)")->check(CLI::Range(1, 3));
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--workers", c.workers,
                  std::string("Worker threads (default from ") + kWorkersEnv + " or 1)");
  if (with_out) app->add_option("--out", c.out, "Output directory");
}

GraphLibrary LibraryFor(const std::string& library_path, const PipelineConfig& config,
                        const HierarchyLevel& level) {
  if (!library_path.empty()) {
    auto in = OpenIn(library_path);
    return GraphLibrary::ReadJsonl(in);
  }
  return BuildLibrary(EnumerateCards(config.space, level));
}

int CmdEnumerate(const Common& c, bool write_library) {
  const PipelineConfig config = c.Pipeline();
  const HierarchyLevel level = c.Level();
  const std::uint64_t closed = CountCards(config.space, level);
  if (closed > kDefaultEnumerationCap) {
    std::cout << "closed_form " << closed << "\n";
    std::cout << "enumeration skipped: " << closed << " cards exceed the cap of "
              << kDefaultEnumerationCap << "\n";
    return 0;
  }
  const auto cards = EnumerateCards(config.space, level);
  const GraphLibrary library = BuildLibrary(cards);
  std::cout << library.size() << "\n";
  std::cout << "cards " << cards.size() << "\n";
  std::cout << "closed_form " << closed << "\n";
  std::cout << "collisions " << library.collisions() << "\n";
  if (write_library) {
    auto out = OpenOut(fs::path(c.out) / "library.jsonl");
    library.WriteJsonl(out);
  }
  return 0;
}

int CmdHash(const std::string& card_path, const std::string& fixture) {
  std::cout << HashCard(LoadCard(card_path, fixture)).hex << "\n";
  return 0;
}

int CmdGed(const Common& c, const std::string& library_path, std::size_t pair_budget,
           std::uint64_t expansion_budget) {
  PipelineConfig config = c.Pipeline();
  const HierarchyLevel level = c.Level();
  const GraphLibrary library = LibraryFor(library_path, config, level);
  const CostModel cost = CostModel::ForConfig(config.space.AtLevel(level));
  if (pair_budget > 0) config.pairs.pair_budget = pair_budget;
  if (expansion_budget > 0) config.ged.expansion_budget = expansion_budget;
  config.pairs.seed = c.seed;
  const auto index_pairs = SamplePairs(library, cost, config.pairs);
  const auto pairs = ComputeDistances(library, index_pairs, cost, config.ged, config.workers);
  std::size_t exact = 0;
  for (const auto& p : pairs) exact += p.exact;
  auto out = OpenOut(fs::path(c.out) / "ged.jsonl");
  WriteGedCache(out, pairs);
  std::cout << "pairs " << pairs.size() << "\nexact " << exact << "\n";
  return 0;
}

int CmdEmbed(const Common& c, const std::string& ged_path, int dim, const std::string& knee,
             int epochs) {
  const PipelineConfig config = c.Pipeline();
  auto in = OpenIn(ged_path);
  const auto pairs = ReadGedCache(in);
  EmbeddingOptions options = config.embedding;
  if (epochs > 0) options.epochs = epochs;
  if (!knee.empty()) {
    std::vector<int> candidates;
    std::stringstream ss(knee);
    for (std::string tok; std::getline(ss, tok, ',');) candidates.push_back(std::stoi(tok));
    std::vector<double> errors;
    for (int d : candidates) {
      const auto r = TrainEmbeddings(pairs, d, c.seed, options);
      errors.push_back(r.loss_trace.back());
      std::cout << "d " << d << " mse " << errors.back() << "\n";
    }
    dim = KneeSelectDim(candidates, errors);
    std::cout << "knee " << dim << "\n";
  }
  const auto result = TrainEmbeddings(pairs, dim, c.seed, options);
  auto out = OpenOut(fs::path(c.out) / "embeddings.json");
  result.table.WriteJson(out);
  std::cout << "vectors " << result.table.size() << "\nd " << dim << "\nfinal_loss "
            << result.table.final_loss << "\n";
  return 0;
}

int CmdSearch(const Common& c, const std::string& library_path, const std::string& table_path,
              const std::string& oracle_kind, const std::string& replay, const std::string& endpoint,
              const std::string& algo, std::size_t budget, bool no_seeds) {
  PipelineConfig config = c.Pipeline();
  const HierarchyLevel level = c.Level();
  const GraphLibrary library = LibraryFor(library_path, config, level);
  if (table_path.empty()) throw InvalidArgumentError("--embeddings is required");
  auto tin = OpenIn(table_path);
  const EmbeddingTable table = EmbeddingTable::ReadJson(tin);
  if (!oracle_kind.empty()) config.oracle.kind = oracle_kind;
  if (!replay.empty()) config.oracle.replay_path = replay;
  if (!endpoint.empty()) config.oracle.endpoint = endpoint;
  config.oracle.workers = config.workers;
  const auto oracle = MakeOracle(config.oracle);
  SearchSpace space{&library, &table, config.space.AtLevel(level), level};
  SearchResult result;
  if (algo == "boshnas") {
    SearchConfig sc = config.search;
    sc.seed = c.seed;
    sc.workers = config.workers;
    if (sc.workers > 1) sc.async = true;
    if (budget > 0) sc.max_evaluations = budget;
    Search search(space, sc, *oracle);
    result = search.Run(no_seeds ? std::vector<ModelCard>{} : cards::SeedModels());
  } else if (algo == "random" || algo == "evolutionary") {
    if (budget == 0) throw InvalidArgumentError("--budget is required for baseline searches");
    result = BaselineSearch(algo == "random" ? BaselineKind::kRandom : BaselineKind::kEvolutionary,
                            space, budget, *oracle, c.seed);
  } else {
    throw InvalidArgumentError("unknown algorithm: " + algo);
  }
  auto out = OpenOut(fs::path(c.out) / "ledger.jsonl");
  WriteLedger(out, result.ledger);
  json summary = {{"algo", algo},
                  {"evaluations", result.evaluations},
                  {"converged", result.converged},
                  {"exhausted", result.exhausted},
                  {"best_score", result.best_score}};
  summary["best_hash"] = result.best_hash ? json(result.best_hash->hex) : json(nullptr);
  summary["best_card"] = result.best_card ? CardToJson(*result.best_card) : json(nullptr);
  auto sout = OpenOut(fs::path(c.out) / "result.json");
  sout << summary.dump(2) << "\n";
  std::cout << summary.dump() << "\n";
  return 0;
}

int CmdSimulate(const std::string& card_path, const std::string& fixture, int tokens,
                std::uint64_t seed, const std::string& dump, int max_seq_len) {
  const ModelCard card = LoadCard(card_path, fixture);
  sim::SimConfig config;
  config.max_seq_len = max_seq_len;
  const sim::EncoderWeights weights = sim::InitWeights(card, seed, config);
  Rng rng(MixSeed(seed, StringSeed("input")));
  sim::Tensor x(tokens, card.h[0]);
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) x(i, j) = rng.Normal();
  }
  const auto outs = sim::ForwardLayers(weights, x);
  std::cout << "params_encoder " << ParamCount(card, false, config) << "\n";
  std::cout << "params_with_embeddings " << ParamCount(card, true, config) << "\n";
  for (std::size_t j = 0; j < outs.size(); ++j) {
    std::cout << "layer " << j << " shape " << outs[j].rows() << "x" << outs[j].cols() << "\n";
  }
  std::cout << "output_shape " << outs.back().rows() << "x" << outs.back().cols() << "\n";
  if (!dump.empty()) {
    auto out = OpenOut(dump);
    out << sim::WeightsToJson(weights).dump() << "\n";
  }
  return 0;
}

int CmdReport(const std::vector<std::string>& ledgers, const std::string& out_dir) {
  for (const auto& path : ledgers) {
    auto in = OpenIn(path);
    const auto ledger = ReadLedger(in);
    const fs::path stem = fs::path(out_dir) / fs::path(path).parent_path().filename();
    std::map<std::string, int> branches;
    std::size_t failures = 0;
    double best = 0.0, total_cost = 0.0;
    std::string best_hash;
    auto curve = OpenOut(fs::path(stem.string() + "_best_curve.csv"));
    curve << "iter,evaluations,best_score,wallclock\n";
    std::size_t n = 0;
    for (const auto& e : ledger) {
      ++n;
      ++branches[std::string(BranchName(e.branch))];
      total_cost += e.cost;
      if (!e.score) {
        ++failures;
      } else if (best_hash.empty() || *e.score > best) {
        best = *e.score;
        best_hash = e.hash.hex;
      }
      curve << e.iter << "," << n << "," << best << "," << e.wallclock << "\n";
    }
    // Score-vs-size frontier: entries no other entry beats on both axes.
    std::vector<const LedgerEntry*> scored;
    for (const auto& e : ledger) {
      if (e.score) scored.push_back(&e);
    }
    std::sort(scored.begin(), scored.end(), [](const LedgerEntry* a, const LedgerEntry* b) {
      if (a->params != b->params) return a->params < b->params;
      if (*a->score != *b->score) return *a->score > *b->score;
      return a->hash < b->hash;
    });
    auto frontier = OpenOut(fs::path(stem.string() + "_frontier.csv"));
    frontier << "hash,params,score,on_frontier\n";
    double running = -1.0;
    for (const auto* e : scored) {
      const bool on = *e->score > running;
      if (on) running = *e->score;
      frontier << e->hash.hex << "," << e->params << "," << *e->score << "," << (on ? 1 : 0)
               << "\n";
    }
    std::cout << "ledger " << path << "\n";
    std::cout << "  evaluations " << ledger.size() << "\n  failures " << failures << "\n";
    std::cout << "  best_score " << best << "\n  best_hash " << best_hash << "\n";
    std::cout << "  total_cost " << total_cost << "\n";
    for (const auto& [name, count] : branches) std::cout << "  branch " << name << " " << count << "\n";
  }
  return 0;
}

int CmdRun(const Common& c) {
  PipelineConfig config = c.Pipeline();
  config.search.seed = c.seed;
  config.oracle.workers = config.workers;
  const auto oracle = MakeOracle(config.oracle);
  const fs::path root(c.out);
  {
    auto out = OpenOut(root / "config.json");
    out << config.ToJson().dump(2) << "\n";
  }
  RunHierarchy(config, *oracle, cards::SeedModels(), [&](const LevelRun& run) {
    const fs::path dir = root / ("level" + std::to_string(run.artifacts.level.index));
    {
      auto out = OpenOut(dir / "library.jsonl");
      run.artifacts.library.WriteJsonl(out);
    }
    {
      auto out = OpenOut(dir / "ged.jsonl");
      WriteGedCache(out, run.artifacts.pairs);
    }
    {
      auto out = OpenOut(dir / "embeddings.json");
      run.artifacts.embedding.table.WriteJson(out);
    }
    {
      auto out = OpenOut(dir / "ledger.jsonl");
      WriteLedger(out, run.search.ledger);
    }
    if (run.transition) {
      auto out = OpenOut(dir / "next_level_manifest.json");
      out << run.transition->Manifest().dump(2) << "\n";
    }
    std::cout << "level " << run.artifacts.level.index << " graphs " << run.artifacts.library.size()
              << " evaluations " << run.search.evaluations << " best " << run.search.best_score
              << "\n";
  });
  return 0;
}

int Main(int argc, char** argv) {
  CLI::App app{"Heterogeneous transformer architecture search"};
  app.require_subcommand(1);

  Common common;
  bool write_library = false;
  auto* enumerate = app.add_subcommand("enumerate", "Enumerate cards and unique graphs");
  AddCommon(enumerate, common);
  enumerate->add_flag("--write-library", write_library, "Write library.jsonl to --out");

  std::string card_path, fixture;
  auto* hash = app.add_subcommand("hash", "Print the graph hash of a card");
  hash->add_option("--card", card_path, "Card JSON file");
  hash->add_option("--fixture", fixture, "Built-in card name");

  std::string library_path;
  std::size_t pair_budget = 0;
  std::uint64_t expansion_budget = 0;
  auto* ged = app.add_subcommand("ged", "Build the pairwise GED cache");
  AddCommon(ged, common);
  ged->add_option("--library", library_path, "Library JSONL (default: enumerate the level)");
  ged->add_option("--pairs", pair_budget, "Pair budget");
  ged->add_option("--budget", expansion_budget, "Search expansions per pair");

  std::string ged_path, knee;
  int dim = kDefaultEmbeddingDim, epochs = 0;
  auto* embed = app.add_subcommand("embed", "Train the embedding table");
  AddCommon(embed, common);
  embed->add_option("--ged", ged_path, "GED cache JSONL")->required();
  embed->add_option("--dim", dim, "Embedding dimension");
  embed->add_option("--knee", knee, "Comma-separated candidate dimensions for knee selection");
  embed->add_option("--epochs", epochs, "Training epochs");

  std::string table_path, oracle_kind, replay, endpoint, algo = "boshnas";
  std::size_t budget = 0;
  bool no_seeds = false;
  auto* search = app.add_subcommand("search", "Run BOSHNAS or a baseline");
  AddCommon(search, common);
  search->add_option("--library", library_path, "Library JSONL (default: enumerate the level)");
  search->add_option("--embeddings", table_path, "Embedding table JSON");
  search->add_option("--oracle", oracle_kind, "Oracle kind")
      ->check(CLI::IsMember({"synthetic", "replay", "external"}));
  search->add_option("--replay", replay, "Replay ledger JSONL");
  search->add_option("--endpoint", endpoint, "External evaluator command or http:// URL");
  search->add_option("--algo", algo, "Search algorithm")
      ->check(CLI::IsMember({"boshnas", "random", "evolutionary"}));
  search->add_option("--budget", budget, "Evaluation budget");
  search->add_flag("--no-seeds", no_seeds, "Start without the seed models");

  int tokens = 8, max_seq_len = 512;
  std::string dump;
  auto* simulate = app.add_subcommand("simulate", "Run the encoder simulator on a card");
  simulate->add_option("--card", card_path, "Card JSON file");
  simulate->add_option("--fixture", fixture, "Built-in card name");
  simulate->add_option("--tokens", tokens, "Sequence length")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", common.seed, "Weight seed");
  simulate->add_option("--max-seq-len", max_seq_len, "Relative embedding length");
  simulate->add_option("--dump", dump, "Write the weights as JSON");

  std::vector<std::string> ledgers;
  auto* report = app.add_subcommand("report", "Summarize ledgers and write plot data");
  report->add_option("ledgers", ledgers, "Ledger JSONL files")->required();
  report->add_option("--out", common.out, "Output directory");

  auto* run = app.add_subcommand("run", "Run the full three-level pipeline");
  AddCommon(run, common);

  CLI11_PARSE(app, argc, argv);

  if (*enumerate) return CmdEnumerate(common, write_library);
  if (*hash) return CmdHash(card_path, fixture);
  if (*ged) return CmdGed(common, library_path, pair_budget, expansion_budget);
  if (*embed) return CmdEmbed(common, ged_path, dim, knee, epochs);
  if (*search) {
    return CmdSearch(common, library_path, table_path, oracle_kind, replay, endpoint, algo, budget,
                     no_seeds);
  }
  if (*simulate) return CmdSimulate(card_path, fixture, tokens, common.seed, dump, max_seq_len);
  if (*report) return CmdReport(ledgers, common.out);
  if (*run) return CmdRun(common);
  return 1;
}

}  // namespace
}  // namespace hetnas

int main(int argc, char** argv) {
  try {
    return hetnas::Main(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "hetnas: error: " << e.what() << "\n";
    return 2;
  }
}
