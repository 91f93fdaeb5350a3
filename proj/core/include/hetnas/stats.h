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

#ifndef HETNAS_STATS_H_
#define HETNAS_STATS_H_

#include <span>
#include <vector>

namespace hetnas {

// Fractional ranks (1-based, ties get the average rank).
std::vector<double> FractionalRanks(std::span<const double> values);

double PearsonCorrelation(std::span<const double> a, std::span<const double> b);

// Spearman rank correlation with average-rank tie handling.
double SpearmanCorrelation(std::span<const double> a,
                           std::span<const double> b);

double Mean(std::span<const double> values);

// Population standard deviation.
double StdDev(std::span<const double> values);

// Median; averages the two middle values for even sizes.
double Median(std::vector<double> values);

}  // namespace hetnas

#endif  // HETNAS_STATS_H_
