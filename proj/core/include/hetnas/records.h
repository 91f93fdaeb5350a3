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

#ifndef HETNAS_RECORDS_H_
#define HETNAS_RECORDS_H_

#include <string_view>
#include <vector>

#include "hetnas/graph.h"

namespace hetnas {

// Where an observed score came from.
enum class ScoreSource { kPretrain, kTransfer, kReplay, kSynthetic };

std::string_view ScoreSourceName(ScoreSource source);
ScoreSource ParseScoreSource(std::string_view name);

// One observed (embedding, score) point of the search corpus.
struct EvaluationRecord {
  GraphHash hash;
  std::vector<double> x;
  double score = 0.0;  // normalized to [0, 1]
  ScoreSource source = ScoreSource::kSynthetic;
};

}  // namespace hetnas

#endif  // HETNAS_RECORDS_H_
