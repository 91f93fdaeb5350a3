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

#include "hetnas/design_space.h"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>

#include "hetnas/error.h"

namespace hetnas {
namespace {

using nlohmann::json;

bool IsKernelSize(std::string_view s) {
  if (s.empty() || s.size() > 3) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  const int k = std::stoi(std::string(s));
  return k > 0 && k % 2 == 1;
}

bool ParamMatchesOp(OpKind op, std::string_view param) {
  switch (op) {
    case OpKind::kSA:
      return param == "SDP" || param == "WMA";
    case OpKind::kLT:
      return param == "DFT" || param == "DCT";
    case OpKind::kDSC:
      return IsKernelSize(param);
  }
  return false;
}

template <typename T>
bool Contains(const std::vector<T>& v, const T& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

template <typename T>
std::vector<T> SortedUnique(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::uint64_t CheckedMul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    throw CombinatorialOverflowError("card count exceeds 64-bit range");
  }
  return a * b;
}

std::uint64_t CheckedAdd(std::uint64_t a, std::uint64_t b) {
  if (b > std::numeric_limits<std::uint64_t>::max() - a) {
    throw CombinatorialOverflowError("card count exceeds 64-bit range");
  }
  return a + b;
}

std::uint64_t IntPow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) r = CheckedMul(r, base);
  return r;
}

json ParamToJson(OpKind op, const std::string& param) {
  if (op == OpKind::kDSC && IsKernelSize(param)) return std::stoi(param);
  return param;
}

std::string ParamFromJson(const json& j) {
  if (j.is_number_integer()) return std::to_string(j.get<int>());
  if (j.is_string()) return j.get<std::string>();
  throw FormatError("operation parameter must be a string or an integer");
}

}  // namespace

std::string_view OpKindName(OpKind op) {
  switch (op) {
    case OpKind::kSA:
      return "SA";
    case OpKind::kLT:
      return "LT";
    case OpKind::kDSC:
      return "DSC";
  }
  return "?";
}

OpKind ParseOpKind(std::string_view name) {
  if (name == "SA") return OpKind::kSA;
  if (name == "LT") return OpKind::kLT;
  if (name == "DSC") return OpKind::kDSC;
  throw FormatError("unknown operation kind: " + std::string(name));
}

LayerSpec ModelCard::Layer(int j) const {
  return LayerSpec{o.at(j), p.at(j), n.at(j), h.at(j), f.at(j)};
}

ModelCard ModelCard::FromLayers(const std::vector<LayerSpec>& layers) {
  ModelCard card;
  card.l = static_cast<int>(layers.size());
  for (const auto& layer : layers) {
    card.o.push_back(layer.op);
    card.n.push_back(layer.heads);
    card.h.push_back(layer.hidden);
    card.f.push_back(layer.ff);
    card.p.push_back(layer.param);
  }
  return card;
}

json CardToJson(const ModelCard& card) {
  json j = json::object();
  j["l"] = card.l;
  j["o"] = json::array();
  for (OpKind op : card.o) j["o"].push_back(std::string(OpKindName(op)));
  j["n"] = card.n;
  j["h"] = card.h;
  j["f"] = card.f;
  j["p"] = json::array();
  for (std::size_t i = 0; i < card.p.size(); ++i) {
    const OpKind op = i < card.o.size() ? card.o[i] : OpKind::kSA;
    j["p"].push_back(ParamToJson(op, card.p[i]));
  }
  return j;
}

ModelCard CardFromJson(const json& j) {
  try {
    ModelCard card;
    card.l = j.at("l").get<int>();
    for (const auto& op : j.at("o")) card.o.push_back(ParseOpKind(op.get<std::string>()));
    card.n = j.at("n").get<std::vector<int>>();
    card.h = j.at("h").get<std::vector<int>>();
    card.f = j.at("f").get<std::vector<std::vector<int>>>();
    for (const auto& p : j.at("p")) card.p.push_back(ParamFromJson(p));
    return card;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model card: ") + e.what());
  }
}

std::string CanonicalString(const ModelCard& card) {
  return CardToJson(card).dump();
}

std::vector<std::string> StructuralProblems(const ModelCard& card) {
  std::vector<std::string> out;
  if (card.l <= 0) out.push_back("layer count must be positive");
  const auto l = static_cast<std::size_t>(std::max(card.l, 0));
  if (card.o.size() != l || card.n.size() != l || card.h.size() != l ||
      card.f.size() != l || card.p.size() != l) {
    out.push_back("list length != l");
    return out;
  }
  for (std::size_t j = 0; j < l; ++j) {
    const std::string at = " at layer " + std::to_string(j);
    if (card.n[j] <= 0) out.push_back("non-positive head count" + at);
    if (card.h[j] <= 0) out.push_back("non-positive hidden size" + at);
    if (card.n[j] > 0 && card.h[j] > 0 && card.h[j] % card.n[j] != 0) {
      out.push_back("head count does not divide hidden size" + at);
    }
    if (card.f[j].empty()) out.push_back("empty feed-forward stack" + at);
    for (int w : card.f[j]) {
      if (w <= 0) out.push_back("non-positive feed-forward width" + at);
    }
    if (!ParamMatchesOp(card.o[j], card.p[j])) {
      out.push_back("op-param inconsistency" + at);
    }
  }
  return out;
}

HierarchyLevel HierarchyLevel::FromIndex(int index) {
  switch (index) {
    case 1:
      return {1, 2, false};
    case 2:
      return {2, 1, false};
    case 3:
      return {3, 1, true};
    default:
      throw InvalidArgumentError("hierarchy level must be 1, 2 or 3");
  }
}

HierarchyLevel NextLevel(const HierarchyLevel& level) {
  if (level.index >= 3) {
    throw InvalidArgumentError("level 3 has no successor");
  }
  return HierarchyLevel::FromIndex(level.index + 1);
}

DesignSpaceConfig DesignSpaceConfig::Standard() {
  DesignSpaceConfig c;
  c.layer_counts = {2, 4};
  c.ops = {OpKind::kSA, OpKind::kLT, OpKind::kDSC};
  c.heads = {2, 4};
  c.hidden = {128, 256};
  c.ff_dims = {512, 1024};
  c.ff_stack_depths = {1, 3};
  c.op_params = {{OpKind::kSA, {"SDP", "WMA"}},
                 {OpKind::kLT, {"DFT", "DCT"}},
                 {OpKind::kDSC, {"5", "9"}}};
  c.stack_size = 2;
  c.hetero_ff = false;
  return c;
}

DesignSpaceConfig DesignSpaceConfig::AtLevel(const HierarchyLevel& level) const {
  DesignSpaceConfig c = *this;
  c.stack_size = level.stack_size;
  c.hetero_ff = level.hetero_ff;
  return c;
}

std::vector<std::string> DesignSpaceConfig::Problems() const {
  std::vector<std::string> out;
  if (stack_size <= 0) out.push_back("stack_size must be positive");
  if (layer_counts.empty()) out.push_back("empty layer-count set");
  if (heads.empty()) out.push_back("empty head set");
  if (hidden.empty()) out.push_back("empty hidden-size set");
  if (ff_dims.empty()) out.push_back("empty feed-forward width set");
  if (ff_stack_depths.empty()) out.push_back("empty feed-forward depth set");
  for (int l : layer_counts) {
    if (l <= 0 || (stack_size > 0 && l % stack_size != 0)) {
      out.push_back("layer count " + std::to_string(l) +
                    " is not a positive multiple of the stack size");
    }
  }
  for (int n : heads) {
    for (int h : hidden) {
      if (n <= 0 || h <= 0 || h % n != 0) {
        out.push_back("head count " + std::to_string(n) +
                      " does not divide hidden size " + std::to_string(h));
      }
    }
  }
  for (int d : ff_stack_depths) {
    if (d <= 0) out.push_back("non-positive feed-forward depth");
  }
  for (int w : ff_dims) {
    if (w <= 0) out.push_back("non-positive feed-forward width");
  }
  for (OpKind op : ops) {
    auto it = op_params.find(op);
    if (it == op_params.end() || it->second.empty()) {
      out.push_back("no parameters for op " + std::string(OpKindName(op)));
      continue;
    }
    for (const auto& p : it->second) {
      if (!ParamMatchesOp(op, p)) {
        out.push_back("parameter " + p + " does not belong to op " +
                      std::string(OpKindName(op)));
      }
    }
  }
  for (const auto& [op, params] : op_params) {
    if (!Contains(ops, op)) {
      out.push_back("op_params lists op " + std::string(OpKindName(op)) +
                    " which is not an allowed op");
    }
  }
  return out;
}

void DesignSpaceConfig::CheckValid() const {
  const auto problems = Problems();
  if (!problems.empty()) {
    throw InvalidArgumentError("invalid design-space config: " + problems.front());
  }
}

json DesignSpaceConfig::ToJson() const {
  json j;
  j["layer_counts"] = layer_counts;
  j["ops"] = json::array();
  for (OpKind op : ops) j["ops"].push_back(std::string(OpKindName(op)));
  j["heads"] = heads;
  j["hidden"] = hidden;
  j["ff_dims"] = ff_dims;
  j["ff_stack_depths"] = ff_stack_depths;
  j["op_params"] = json::object();
  for (const auto& [op, params] : op_params) {
    json arr = json::array();
    for (const auto& p : params) arr.push_back(ParamToJson(op, p));
    j["op_params"][std::string(OpKindName(op))] = arr;
  }
  j["stack_size"] = stack_size;
  j["hetero_ff"] = hetero_ff;
  return j;
}

DesignSpaceConfig DesignSpaceConfig::FromJson(const json& j) {
  try {
    DesignSpaceConfig c;
    c.layer_counts = j.at("layer_counts").get<std::vector<int>>();
    for (const auto& op : j.at("ops")) c.ops.push_back(ParseOpKind(op.get<std::string>()));
    c.heads = j.at("heads").get<std::vector<int>>();
    c.hidden = j.at("hidden").get<std::vector<int>>();
    c.ff_dims = j.at("ff_dims").get<std::vector<int>>();
    c.ff_stack_depths = j.at("ff_stack_depths").get<std::vector<int>>();
    for (const auto& [name, params] : j.at("op_params").items()) {
      auto& dst = c.op_params[ParseOpKind(name)];
      for (const auto& p : params) dst.push_back(ParamFromJson(p));
    }
    c.stack_size = j.value("stack_size", 2);
    c.hetero_ff = j.value("hetero_ff", false);
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed design-space config: ") + e.what());
  }
}

std::vector<std::string> ValidateCard(const ModelCard& card,
                                      const DesignSpaceConfig& config) {
  std::vector<std::string> out = StructuralProblems(card);
  const auto l = static_cast<std::size_t>(std::max(card.l, 0));
  const bool lengths_ok = card.o.size() == l && card.n.size() == l &&
                          card.h.size() == l && card.f.size() == l &&
                          card.p.size() == l;
  if (!Contains(config.layer_counts, card.l)) {
    out.push_back("layer count " + std::to_string(card.l) + " not allowed");
  }
  if (!lengths_ok) return out;
  for (std::size_t j = 0; j < l; ++j) {
    const std::string at = " at layer " + std::to_string(j);
    if (!Contains(config.ops, card.o[j])) out.push_back("op not allowed" + at);
    auto it = config.op_params.find(card.o[j]);
    if (it == config.op_params.end() || !Contains(it->second, card.p[j])) {
      out.push_back("op-param inconsistency" + at);
    }
    if (!Contains(config.heads, card.n[j])) out.push_back("head count not allowed" + at);
    if (!Contains(config.hidden, card.h[j])) out.push_back("hidden size not allowed" + at);
    const int depth = static_cast<int>(card.f[j].size());
    if (!Contains(config.ff_stack_depths, depth)) {
      out.push_back("feed-forward depth not allowed" + at);
    }
    for (int w : card.f[j]) {
      if (!Contains(config.ff_dims, w)) {
        out.push_back("feed-forward width not allowed" + at);
        break;
      }
    }
    if (!config.hetero_ff && !card.f[j].empty() &&
        std::any_of(card.f[j].begin(), card.f[j].end(),
                    [&](int w) { return w != card.f[j].front(); })) {
      out.push_back("heterogeneous feed-forward stack" + at);
    }
  }
  const int s = config.stack_size;
  if (s > 0 && card.l % s != 0) {
    out.push_back("layer count is not a multiple of the stack size");
  } else if (s > 1) {
    for (int j = 0; j < card.l; ++j) {
      if (j % s != 0 && !(card.Layer(j) == card.Layer(j - j % s))) {
        out.push_back("layers differ inside stack " + std::to_string(j / s));
        j += s - 1 - j % s;
      }
    }
  }
  return out;
}

std::vector<LayerSpec> EnumerateLayerSpecs(const DesignSpaceConfig& config,
                                           bool hetero_ff) {
  std::vector<std::vector<int>> ff_options;
  const auto widths = SortedUnique(config.ff_dims);
  for (int depth : SortedUnique(config.ff_stack_depths)) {
    if (!hetero_ff) {
      for (int w : widths) ff_options.emplace_back(depth, w);
      continue;
    }
    // Odometer over width tuples of length `depth`.
    std::vector<std::size_t> idx(depth, 0);
    while (true) {
      std::vector<int> ff(depth);
      for (int k = 0; k < depth; ++k) ff[k] = widths[idx[k]];
      ff_options.push_back(std::move(ff));
      int k = depth - 1;
      while (k >= 0 && ++idx[k] == widths.size()) idx[k--] = 0;
      if (k < 0) break;
    }
  }
  std::vector<LayerSpec> out;
  for (OpKind op : config.ops) {
    auto it = config.op_params.find(op);
    if (it == config.op_params.end()) continue;
    for (const auto& param : it->second) {
      for (int n : SortedUnique(config.heads)) {
        for (int h : SortedUnique(config.hidden)) {
          for (const auto& ff : ff_options) {
            out.push_back(LayerSpec{op, param, n, h, ff});
          }
        }
      }
    }
  }
  return out;
}

std::uint64_t CountCards(const DesignSpaceConfig& config,
                         const HierarchyLevel& level) {
  const DesignSpaceConfig c = config.AtLevel(level);
  std::uint64_t params = 0;
  for (OpKind op : std::set<OpKind>(c.ops.begin(), c.ops.end())) {
    auto it = c.op_params.find(op);
    if (it != c.op_params.end()) params += SortedUnique(it->second).size();
  }
  const std::uint64_t widths = SortedUnique(c.ff_dims).size();
  std::uint64_t ff = 0;
  for (int depth : SortedUnique(c.ff_stack_depths)) {
    ff = CheckedAdd(ff, c.hetero_ff ? IntPow(widths, depth) : widths);
  }
  const std::uint64_t per_stack =
      CheckedMul(CheckedMul(CheckedMul(params, SortedUnique(c.heads).size()),
                            SortedUnique(c.hidden).size()),
                 ff);
  std::uint64_t total = 0;
  for (int l : SortedUnique(c.layer_counts)) {
    if (l <= 0 || l % c.stack_size != 0) continue;
    total = CheckedAdd(total, IntPow(per_stack, l / c.stack_size));
  }
  return total;
}

ModelCard ExpandStacks(const std::vector<LayerSpec>& stacks, int stack_size) {
  std::vector<LayerSpec> layers;
  layers.reserve(stacks.size() * stack_size);
  for (const auto& s : stacks) {
    for (int k = 0; k < stack_size; ++k) layers.push_back(s);
  }
  return ModelCard::FromLayers(layers);
}

std::vector<ModelCard> EnumerateCards(const DesignSpaceConfig& config,
                                      const HierarchyLevel& level,
                                      std::uint64_t cap) {
  const DesignSpaceConfig c = config.AtLevel(level);
  c.CheckValid();
  const std::uint64_t count = CountCards(c, level);
  if (count > cap) {
    throw CombinatorialOverflowError("space holds " + std::to_string(count) +
                                     " cards, above the enumeration cap of " +
                                     std::to_string(cap));
  }
  const auto specs = EnumerateLayerSpecs(c, c.hetero_ff);
  std::vector<std::pair<std::string, ModelCard>> keyed;
  keyed.reserve(count);
  for (int l : SortedUnique(c.layer_counts)) {
    const int stacks = l / c.stack_size;
    if (specs.empty()) break;
    std::vector<std::size_t> idx(stacks, 0);
    std::vector<LayerSpec> chosen(stacks);
    while (true) {
      for (int k = 0; k < stacks; ++k) chosen[k] = specs[idx[k]];
      ModelCard card = ExpandStacks(chosen, c.stack_size);
      keyed.emplace_back(CanonicalString(card), std::move(card));
      int k = stacks - 1;
      while (k >= 0 && ++idx[k] == specs.size()) idx[k--] = 0;
      if (k < 0) break;
    }
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<ModelCard> out;
  out.reserve(keyed.size());
  for (auto& [key, card] : keyed) out.push_back(std::move(card));
  return out;
}

namespace cards {
namespace {
ModelCard Homogeneous(int l, OpKind op, const std::string& p, int n, int h,
                      std::vector<int> ff) {
  return ModelCard::FromLayers(std::vector<LayerSpec>(l, LayerSpec{op, p, n, h, ff}));
}
}  // namespace

ModelCard BertTiny() { return Homogeneous(2, OpKind::kSA, "SDP", 2, 128, {512}); }
ModelCard BertMini() { return Homogeneous(4, OpKind::kSA, "SDP", 4, 256, {1024}); }

ModelCard FlexiMiniLevel1Best() {
  return ModelCard::FromLayers({
      {OpKind::kLT, "DCT", 4, 256, {1024}},
      {OpKind::kLT, "DCT", 4, 256, {1024}},
      {OpKind::kLT, "DCT", 2, 256, {512, 512, 512}},
      {OpKind::kLT, "DCT", 2, 256, {512, 512, 512}},
  });
}

ModelCard FlexiMini() {
  return ModelCard::FromLayers({
      {OpKind::kSA, "SDP", 2, 256, {512, 512, 512}},
      {OpKind::kSA, "SDP", 2, 256, {512, 512, 512}},
      {OpKind::kLT, "DCT", 4, 128, {1024}},
      {OpKind::kLT, "DCT", 4, 128, {1024}},
  });
}

ModelCard AblationNoSecondOrder() {
  return ModelCard::FromLayers({
      {OpKind::kSA, "SDP", 4, 128, {1024}},
      {OpKind::kSA, "WMA", 4, 128, {1024}},
  });
}

ModelCard AblationNoHeteroscedastic() {
  return ModelCard::FromLayers({
      {OpKind::kLT, "DCT", 4, 256, {1024, 1024, 1024}},
      {OpKind::kLT, "DCT", 4, 256, {1024, 1024, 1024}},
      {OpKind::kSA, "SDP", 4, 128, {512, 512, 512}},
      {OpKind::kSA, "SDP", 4, 128, {512, 512, 512}},
  });
}

std::vector<ModelCard> SeedModels() {
  // Tiny = 2/128, Mini = 4/256; heads = hidden/64, ff width = 4 * hidden.
  struct Shape {
    int l, h;
  };
  const Shape shapes[] = {{2, 128}, {2, 256}, {4, 128}, {4, 256}};
  const std::pair<OpKind, std::string> families[] = {
      {OpKind::kSA, "SDP"}, {OpKind::kLT, "DFT"}, {OpKind::kDSC, "9"}};
  std::vector<ModelCard> out;
  for (const auto& [op, p] : families) {
    for (const auto& s : shapes) {
      out.push_back(Homogeneous(s.l, op, p, s.h / 64, s.h, {4 * s.h}));
    }
  }
  return out;
}

}  // namespace cards
}  // namespace hetnas
