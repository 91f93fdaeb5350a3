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

#ifndef HETNAS_ENCODER_SIM_H_
#define HETNAS_ENCODER_SIM_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hetnas/design_space.h"
#include "json.hpp"

namespace hetnas {
namespace sim {

// Tokens along rows, features along columns.
using Tensor = Eigen::MatrixXd;

struct SimConfig {
  // Rows of each relative embedding tensor; longer inputs are rejected.
  int max_seq_len = 512;
  int vocab_size = 30522;
  // Token embedding table of vocab_size x h[0] materialized when set.
  bool include_embeddings = false;
};

// Weights of one attention head. Unused tensors stay empty:
//   SA   wq, wk, wv (h x h/n), wo (h/n x h), wa (h/n x h/n) for WMA
//   LT   wq, wv (h/n x h/n), r (max_seq_len x h/n)
//   DSC  as LT plus kernel (k x h/n), gate_w (h/n x h/n), gate_b (1 x h/n)
struct HeadWeights {
  OpKind op = OpKind::kSA;
  std::string param;
  Tensor wq, wk, wv, wo, wa;
  Tensor r;
  Tensor kernel, gate_w, gate_b;
};

struct LayerWeights {
  std::vector<HeadWeights> heads;
  Tensor norm1_gamma, norm1_beta;
  // ff_w[i] maps the previous width to f[i]; the last pair maps back to h.
  std::vector<Tensor> ff_w, ff_b;
  Tensor norm2_gamma, norm2_beta;
  // Present only when h[j] != h[j+1].
  Tensor proj_w, proj_b;
};

struct EncoderWeights {
  ModelCard card;
  SimConfig config;
  Tensor token_embedding;
  std::vector<LayerWeights> layers;

  // Every materialized tensor with a dotted name ("layer0.head1.wq", ...).
  std::vector<std::pair<std::string, const Tensor*>> Tensors() const;
};

// Gaussian(0, 0.02) matrices, zero biases and unit norm scales, all drawn
// from `seed`. Throws InvalidCardError for structurally invalid cards.
EncoderWeights InitWeights(const ModelCard& card, std::uint64_t seed, const SimConfig& config = {});

// Parameter count from the declared shapes alone.
std::int64_t ParamCount(const ModelCard& card, bool include_embeddings,
                        const SimConfig& config = {});

// Shapes plus row-major data.
nlohmann::json WeightsToJson(const EncoderWeights& weights);
EncoderWeights WeightsFromJson(const nlohmann::json& j);

// Row-wise softmax with max subtraction.
Tensor Softmax(const Tensor& scores);

// softmax(Q W_q K^T / sqrt(h)) V W_o for SDP, softmax(Q W_a K^T) V W_o for WMA.
Tensor SaHead(const Tensor& x, const HeadWeights& w);

// softmax(Q R^T / sqrt(d_Q)) V with R of shape N_T x d_Q.
Tensor RelativeAttention(const Tensor& q, const Tensor& r, const Tensor& v);

// Orthonormal DCT-II matrix; C x applies it along rows of x.
Tensor DctMatrix(int n);
// Real and imaginary parts of the unnormalized DFT matrix.
std::pair<Tensor, Tensor> DftMatrix(int n);

// DFT: Re(F_N X F_d). DCT: C_N X C_d^T.
Tensor LtMix(const Tensor& x, std::string_view variant);

// Same-padded depthwise convolution along tokens with a k x d kernel (k odd),
// multiplied by sigmoid(x gate_w + gate_b) when both gate tensors are given.
Tensor DscConv(const Tensor& x, const Tensor& kernel, const Tensor* gate_w = nullptr,
               const Tensor* gate_b = nullptr);

Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta);
Tensor Gelu(const Tensor& x);

// One head applied to the layer input (SA) or to its slice of width h/n
// (LT, DSC).
Tensor HeadForward(const Tensor& x, const HeadWeights& w);

Tensor LayerForward(const Tensor& x, const LayerWeights& w, const LayerSpec& spec);

// Activations after each layer's projection; the last has width h[l-1].
std::vector<Tensor> ForwardLayers(const EncoderWeights& weights, const Tensor& x);
Tensor Forward(const EncoderWeights& weights, const Tensor& x);
Tensor Forward(const ModelCard& card, const Tensor& x, std::uint64_t seed,
               const SimConfig& config = {});

}  // namespace sim

using sim::ParamCount;

}  // namespace hetnas

#endif  // HETNAS_ENCODER_SIM_H_
