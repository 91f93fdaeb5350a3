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

#ifndef HETNAS_DESIGN_SPACE_H_
#define HETNAS_DESIGN_SPACE_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace hetnas {

enum class OpKind { kSA, kLT, kDSC };

std::string_view OpKindName(OpKind op);
OpKind ParseOpKind(std::string_view name);

// The full per-layer configuration of one encoder layer.
struct LayerSpec {
  OpKind op = OpKind::kSA;
  std::string param;  // "SDP"/"WMA", "DFT"/"DCT", or a kernel size ("5").
  int heads = 0;
  int hidden = 0;
  std::vector<int> ff;  // feed-forward hidden-layer widths, in order

  bool operator==(const LayerSpec&) const = default;
  auto operator<=>(const LayerSpec&) const = default;
};

// Design decisions identifying one architecture. Per-layer fields are stored
// column-wise, mirroring the JSON card keys l, o, n, h, f, p.
struct ModelCard {
  int l = 0;
  std::vector<OpKind> o;
  std::vector<int> n;
  std::vector<int> h;
  std::vector<std::vector<int>> f;
  std::vector<std::string> p;

  LayerSpec Layer(int j) const;
  static ModelCard FromLayers(const std::vector<LayerSpec>& layers);

  bool operator==(const ModelCard&) const = default;
};

nlohmann::json CardToJson(const ModelCard& card);
ModelCard CardFromJson(const nlohmann::json& j);

// Sorted-key JSON with arrays in layer order. This string is the card's
// canonical identity for ordering and fixtures.
std::string CanonicalString(const ModelCard& card);

// Structural problems that make a card unusable regardless of the design
// space: list lengths, positive sizes, heads dividing hidden, and an operation
// parameter of the right family for the operation.
std::vector<std::string> StructuralProblems(const ModelCard& card);

struct HierarchyLevel {
  int index = 1;
  int stack_size = 2;
  bool hetero_ff = false;

  static HierarchyLevel FromIndex(int index);
  bool operator==(const HierarchyLevel&) const = default;
};

// Level 1 -> 2 halves the stack size, 2 -> 3 enables heterogeneous
// feed-forward stacks. Throws InvalidArgumentError at level 3.
HierarchyLevel NextLevel(const HierarchyLevel& level);

struct DesignSpaceConfig {
  std::vector<int> layer_counts;
  std::vector<OpKind> ops;
  std::vector<int> heads;
  std::vector<int> hidden;
  std::vector<int> ff_dims;
  std::vector<int> ff_stack_depths;
  std::map<OpKind, std::vector<std::string>> op_params;
  int stack_size = 2;
  bool hetero_ff = false;

  // The Tiny-to-Mini space: l {2,4}, ops {SA,LT,DSC}, heads {2,4}, hidden
  // {128,256}, ff {512,1024}, ff stacks {1,3}, SA {SDP,WMA}, LT {DFT,DCT},
  // DSC {5,9}, stack size 2.
  static DesignSpaceConfig Standard();

  DesignSpaceConfig AtLevel(const HierarchyLevel& level) const;

  // Invariant violations of the config itself; empty iff valid.
  std::vector<std::string> Problems() const;
  void CheckValid() const;

  nlohmann::json ToJson() const;
  static DesignSpaceConfig FromJson(const nlohmann::json& j);
};

// All invariant violations of `card` under `config` (using the config's
// stack_size and hetero_ff). Empty iff the card is a member of the space.
std::vector<std::string> ValidateCard(const ModelCard& card,
                                      const DesignSpaceConfig& config);

// Every distinct per-layer configuration allowed by the config; with
// hetero_ff the widths inside one feed-forward stack vary independently.
std::vector<LayerSpec> EnumerateLayerSpecs(const DesignSpaceConfig& config,
                                           bool hetero_ff);

// Closed-form size of the space at `level`.
std::uint64_t CountCards(const DesignSpaceConfig& config,
                         const HierarchyLevel& level);

inline constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

// Every card of the space at `level`, in canonical order (lexicographic over
// CanonicalString). Throws CombinatorialOverflowError when CountCards
// exceeds `cap`.
std::vector<ModelCard> EnumerateCards(const DesignSpaceConfig& config,
                                      const HierarchyLevel& level,
                                      std::uint64_t cap = kDefaultEnumerationCap);

// Cards expanded from one LayerSpec per stack.
ModelCard ExpandStacks(const std::vector<LayerSpec>& stacks, int stack_size);

namespace cards {
// Fixture cards used across tests and the CLI.
ModelCard BertTiny();
ModelCard BertMini();
ModelCard FlexiMiniLevel1Best();  // best card of the s=2 level
ModelCard FlexiMini();            // best card of the s=1 and s=1* levels
ModelCard AblationNoSecondOrder();
ModelCard AblationNoHeteroscedastic();
// The twelve seed models: BERT/FNet/ConvBERT at Tiny, 2/256, 4/128, Mini.
std::vector<ModelCard> SeedModels();
}  // namespace cards

}  // namespace hetnas

#endif  // HETNAS_DESIGN_SPACE_H_
