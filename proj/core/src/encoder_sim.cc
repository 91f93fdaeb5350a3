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

#include "hetnas/encoder_sim.h"

#include <cmath>
#include <numbers>

#include "hetnas/error.h"
#include "hetnas/rng.h"

namespace hetnas {
namespace sim {
namespace {

using nlohmann::json;

constexpr double kInitStd = 0.02;
constexpr double kNormEps = 1e-12;

Tensor RandomTensor(Rng& rng, int rows, int cols) {
  Tensor t(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) t(i, j) = kInitStd * rng.Normal();
  }
  return t;
}

void CheckCard(const ModelCard& card) {
  const auto problems = StructuralProblems(card);
  if (!problems.empty()) throw InvalidCardError(problems.front());
}

int KernelSize(const std::string& param) {
  try {
    return std::stoi(param);
  } catch (const std::exception&) {
    throw InvalidCardError("DSC parameter is not a kernel size: " + param);
  }
}

int NextHidden(const ModelCard& card, int j) {
  return j + 1 < card.l ? card.h[j + 1] : card.h[j];
}

json TensorToJson(const Tensor& t) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(t.size()));
  for (int i = 0; i < t.rows(); ++i) {
    for (int j = 0; j < t.cols(); ++j) data.push_back(t(i, j));
  }
  return {{"shape", {t.rows(), t.cols()}}, {"data", std::move(data)}};
}

Tensor TensorFromJson(const json& j) {
  const auto shape = j.at("shape").get<std::vector<long>>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0 ||
      static_cast<std::size_t>(shape[0] * shape[1]) != data.size()) {
    throw FormatError("tensor shape does not match its data");
  }
  Tensor t(shape[0], shape[1]);
  for (long i = 0; i < shape[0]; ++i) {
    for (long k = 0; k < shape[1]; ++k) t(i, k) = data[i * shape[1] + k];
  }
  return t;
}

void RequireShape(const Tensor& t, long rows, long cols, const char* what) {
  if (t.rows() != rows || t.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", got " + std::to_string(t.rows()) + "x" +
                     std::to_string(t.cols()));
  }
}

}  // namespace

std::vector<std::pair<std::string, const Tensor*>> EncoderWeights::Tensors() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  auto add = [&](std::string name, const Tensor& t) {
    if (t.size() > 0) out.emplace_back(std::move(name), &t);
  };
  add("token_embedding", token_embedding);
  for (std::size_t j = 0; j < layers.size(); ++j) {
    const LayerWeights& lw = layers[j];
    const std::string lp = "layer" + std::to_string(j) + ".";
    for (std::size_t i = 0; i < lw.heads.size(); ++i) {
      const HeadWeights& hw = lw.heads[i];
      const std::string hp = lp + "head" + std::to_string(i) + ".";
      add(hp + "wq", hw.wq);
      add(hp + "wk", hw.wk);
      add(hp + "wv", hw.wv);
      add(hp + "wo", hw.wo);
      add(hp + "wa", hw.wa);
      add(hp + "r", hw.r);
      add(hp + "kernel", hw.kernel);
      add(hp + "gate_w", hw.gate_w);
      add(hp + "gate_b", hw.gate_b);
    }
    add(lp + "norm1_gamma", lw.norm1_gamma);
    add(lp + "norm1_beta", lw.norm1_beta);
    for (std::size_t i = 0; i < lw.ff_w.size(); ++i) {
      add(lp + "ff" + std::to_string(i) + ".w", lw.ff_w[i]);
      add(lp + "ff" + std::to_string(i) + ".b", lw.ff_b[i]);
    }
    add(lp + "norm2_gamma", lw.norm2_gamma);
    add(lp + "norm2_beta", lw.norm2_beta);
    add(lp + "proj_w", lw.proj_w);
    add(lp + "proj_b", lw.proj_b);
  }
  return out;
}

EncoderWeights InitWeights(const ModelCard& card, std::uint64_t seed, const SimConfig& config) {
  CheckCard(card);
  if (config.max_seq_len <= 0) throw InvalidArgumentError("max_seq_len must be positive");
  Rng rng(seed);
  EncoderWeights w;
  w.card = card;
  w.config = config;
  if (config.include_embeddings) {
    w.token_embedding = RandomTensor(rng, config.vocab_size, card.h[0]);
  }
  for (int j = 0; j < card.l; ++j) {
    const int h = card.h[j];
    const int n = card.n[j];
    const int dq = h / n;
    LayerWeights lw;
    for (int i = 0; i < n; ++i) {
      HeadWeights hw;
      hw.op = card.o[j];
      hw.param = card.p[j];
      if (hw.op == OpKind::kSA) {
        hw.wq = RandomTensor(rng, h, dq);
        hw.wk = RandomTensor(rng, h, dq);
        hw.wv = RandomTensor(rng, h, dq);
        hw.wo = RandomTensor(rng, dq, h);
        if (hw.param == "WMA") hw.wa = RandomTensor(rng, dq, dq);
      } else {
        hw.wq = RandomTensor(rng, dq, dq);
        hw.wv = RandomTensor(rng, dq, dq);
        hw.r = RandomTensor(rng, config.max_seq_len, dq);
        if (hw.op == OpKind::kDSC) {
          hw.kernel = RandomTensor(rng, KernelSize(hw.param), dq);
          hw.gate_w = RandomTensor(rng, dq, dq);
          hw.gate_b = Tensor::Zero(1, dq);
        }
      }
      lw.heads.push_back(std::move(hw));
    }
    lw.norm1_gamma = Tensor::Ones(1, h);
    lw.norm1_beta = Tensor::Zero(1, h);
    int prev = h;
    for (int width : card.f[j]) {
      lw.ff_w.push_back(RandomTensor(rng, prev, width));
      lw.ff_b.push_back(Tensor::Zero(1, width));
      prev = width;
    }
    lw.ff_w.push_back(RandomTensor(rng, prev, h));
    lw.ff_b.push_back(Tensor::Zero(1, h));
    lw.norm2_gamma = Tensor::Ones(1, h);
    lw.norm2_beta = Tensor::Zero(1, h);
    const int next = NextHidden(card, j);
    if (next != h) {
      lw.proj_w = RandomTensor(rng, h, next);
      lw.proj_b = Tensor::Zero(1, next);
    }
    w.layers.push_back(std::move(lw));
  }
  return w;
}

std::int64_t ParamCount(const ModelCard& card, bool include_embeddings, const SimConfig& config) {
  CheckCard(card);
  const std::int64_t seq = config.max_seq_len;
  std::int64_t total = include_embeddings ? std::int64_t{config.vocab_size} * card.h[0] : 0;
  for (int j = 0; j < card.l; ++j) {
    const std::int64_t h = card.h[j];
    const std::int64_t n = card.n[j];
    const std::int64_t dq = h / n;
    std::int64_t head = 0;
    switch (card.o[j]) {
      case OpKind::kSA:
        head = 3 * h * dq + dq * h + (card.p[j] == "WMA" ? dq * dq : 0);
        break;
      case OpKind::kLT:
        head = 2 * dq * dq + seq * dq;
        break;
      case OpKind::kDSC:
        head = 2 * dq * dq + seq * dq + KernelSize(card.p[j]) * dq + dq * dq + dq;
        break;
    }
    total += n * head + 4 * h;
    std::int64_t prev = h;
    for (int width : card.f[j]) {
      total += prev * width + width;
      prev = width;
    }
    total += prev * h + h;
    const std::int64_t next = NextHidden(card, j);
    if (next != h) total += h * next + next;
  }
  return total;
}

json WeightsToJson(const EncoderWeights& weights) {
  json tensors = json::object();
  for (const auto& [name, t] : weights.Tensors()) tensors[name] = TensorToJson(*t);
  return {{"card", CardToJson(weights.card)},
          {"max_seq_len", weights.config.max_seq_len},
          {"vocab_size", weights.config.vocab_size},
          {"include_embeddings", weights.config.include_embeddings},
          {"tensors", std::move(tensors)}};
}

EncoderWeights WeightsFromJson(const json& j) {
  try {
    SimConfig config;
    config.max_seq_len = j.at("max_seq_len").get<int>();
    config.vocab_size = j.at("vocab_size").get<int>();
    config.include_embeddings = j.at("include_embeddings").get<bool>();
    const ModelCard card = CardFromJson(j.at("card"));
    // Build the expected layout, then overwrite every tensor from the file.
    EncoderWeights w = InitWeights(card, 0, config);
    const json& tensors = j.at("tensors");
    std::size_t seen = 0;
    for (const auto& [name, t] : w.Tensors()) {
      Tensor loaded = TensorFromJson(tensors.at(name));
      RequireShape(loaded, t->rows(), t->cols(), name.c_str());
      *const_cast<Tensor*>(t) = std::move(loaded);
      ++seen;
    }
    if (seen != tensors.size()) throw FormatError("weight file has unexpected tensors");
    return w;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed weight file: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("malformed weight file: ") + e.what());
  }
}

Tensor Softmax(const Tensor& scores) {
  Tensor out(scores.rows(), scores.cols());
  for (int i = 0; i < scores.rows(); ++i) {
    const double m = scores.row(i).maxCoeff();
    double sum = 0.0;
    for (int j = 0; j < scores.cols(); ++j) {
      out(i, j) = std::exp(scores(i, j) - m);
      sum += out(i, j);
    }
    out.row(i) /= sum;
  }
  return out;
}

Tensor SaHead(const Tensor& x, const HeadWeights& w) {
  if (x.cols() != w.wq.rows() || w.wk.rows() != x.cols() || w.wv.rows() != x.cols() ||
      w.wo.rows() != w.wv.cols()) {
    throw ShapeError("attention head weights do not match the input");
  }
  const Tensor q = x * w.wq;
  const Tensor k = x * w.wk;
  const Tensor v = x * w.wv;
  Tensor scores;
  if (w.param == "WMA") {
    RequireShape(w.wa, q.cols(), k.cols(), "wa");
    scores = q * w.wa * k.transpose();
  } else {
    scores = (q * k.transpose()) / std::sqrt(static_cast<double>(x.cols()));
  }
  return Softmax(scores) * v * w.wo;
}

Tensor RelativeAttention(const Tensor& q, const Tensor& r, const Tensor& v) {
  RequireShape(r, q.rows(), q.cols(), "relative embeddings");
  if (v.rows() != q.rows()) throw ShapeError("relative attention values have the wrong length");
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  return Softmax(q * r.transpose() * scale) * v;
}

Tensor DctMatrix(int n) {
  Tensor c(n, n);
  for (int k = 0; k < n; ++k) {
    const double s = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
    for (int i = 0; i < n; ++i) {
      c(k, i) = s * std::cos(std::numbers::pi * (2 * i + 1) * k / (2.0 * n));
    }
  }
  return c;
}

std::pair<Tensor, Tensor> DftMatrix(int n) {
  Tensor re(n, n), im(n, n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      // Reduce the index product first to keep the angle small.
      const double a = -2.0 * std::numbers::pi * static_cast<double>((k * i) % n) / n;
      re(k, i) = std::cos(a);
      im(k, i) = std::sin(a);
    }
  }
  return {re, im};
}

Tensor LtMix(const Tensor& x, std::string_view variant) {
  const int rows = static_cast<int>(x.rows());
  const int cols = static_cast<int>(x.cols());
  if (variant == "DCT") return DctMatrix(rows) * x * DctMatrix(cols).transpose();
  if (variant == "DFT") {
    const auto [ar, ai] = DftMatrix(rows);
    const auto [br, bi] = DftMatrix(cols);
    return ar * x * br - ai * x * bi;
  }
  throw InvalidArgumentError("unknown linear transform: " + std::string(variant));
}

Tensor DscConv(const Tensor& x, const Tensor& kernel, const Tensor* gate_w, const Tensor* gate_b) {
  const long k = kernel.rows();
  if (k % 2 == 0) throw InvalidArgumentError("convolution kernel size must be odd");
  if (kernel.cols() != x.cols()) throw ShapeError("kernel width does not match the input");
  const long half = k / 2;
  Tensor out = Tensor::Zero(x.rows(), x.cols());
  for (long t = 0; t < x.rows(); ++t) {
    for (long m = 0; m < k; ++m) {
      const long src = t + m - half;
      if (src < 0 || src >= x.rows()) continue;
      out.row(t) += kernel.row(m).cwiseProduct(x.row(src));
    }
  }
  if (gate_w != nullptr && gate_b != nullptr) {
    RequireShape(*gate_w, x.cols(), x.cols(), "gate_w");
    RequireShape(*gate_b, 1, x.cols(), "gate_b");
    Tensor z = x * *gate_w;
    z.rowwise() += gate_b->row(0);
    out = out.cwiseProduct(z.unaryExpr([](double a) { return 1.0 / (1.0 + std::exp(-a)); }));
  }
  return out;
}

Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  RequireShape(gamma, 1, x.cols(), "norm scale");
  RequireShape(beta, 1, x.cols(), "norm shift");
  Tensor out(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().mean();
    out.row(i) = ((x.row(i).array() - mean) / std::sqrt(var + kNormEps)).matrix();
  }
  out = out.cwiseProduct(gamma.replicate(x.rows(), 1));
  out.rowwise() += beta.row(0);
  return out;
}

Tensor Gelu(const Tensor& x) {
  return x.unaryExpr([](double a) { return 0.5 * a * (1.0 + std::erf(a / std::numbers::sqrt2)); });
}

Tensor HeadForward(const Tensor& x, const HeadWeights& w) {
  if (w.op == OpKind::kSA) return SaHead(x, w);
  if (x.rows() > w.r.rows()) {
    throw ShapeError("sequence of " + std::to_string(x.rows()) +
                     " tokens exceeds the relative embedding length");
  }
  if (x.cols() != w.wq.rows()) throw ShapeError("head slice does not match its weights");
  const Tensor rel = RelativeAttention(x * w.wq, w.r.topRows(x.rows()), x * w.wv);
  if (w.op == OpKind::kLT) return LtMix(x, w.param) + rel;
  return DscConv(x, w.kernel, &w.gate_w, &w.gate_b) + rel;
}

Tensor LayerForward(const Tensor& x, const LayerWeights& w, const LayerSpec& spec) {
  const int h = spec.hidden;
  if (x.cols() != h) throw ShapeError("layer input width does not match its hidden size");
  if (static_cast<int>(w.heads.size()) != spec.heads) throw ShapeError("head count mismatch");
  Tensor mixed = Tensor::Zero(x.rows(), h);
  const int dq = h / spec.heads;
  for (int i = 0; i < spec.heads; ++i) {
    if (spec.op == OpKind::kSA) {
      mixed += HeadForward(x, w.heads[i]);
    } else {
      mixed.middleCols(i * dq, dq) = HeadForward(x.middleCols(i * dq, dq), w.heads[i]);
    }
  }
  const Tensor a = LayerNorm(x + mixed, w.norm1_gamma, w.norm1_beta);
  if (w.ff_w.size() != spec.ff.size() + 1) throw ShapeError("feed-forward depth mismatch");
  Tensor z = a;
  for (std::size_t i = 0; i < w.ff_w.size(); ++i) {
    if (z.cols() != w.ff_w[i].rows()) throw ShapeError("feed-forward width mismatch");
    z = z * w.ff_w[i];
    z.rowwise() += w.ff_b[i].row(0);
    if (i + 1 < w.ff_w.size()) z = Gelu(z);
  }
  if (z.cols() != h) throw ShapeError("feed-forward output width mismatch");
  Tensor out = LayerNorm(a + z, w.norm2_gamma, w.norm2_beta);
  if (w.proj_w.size() > 0) {
    out = out * w.proj_w;
    out.rowwise() += w.proj_b.row(0);
  }
  return out;
}

std::vector<Tensor> ForwardLayers(const EncoderWeights& weights, const Tensor& x) {
  const ModelCard& card = weights.card;
  if (x.cols() != card.h[0]) throw ShapeError("input width must equal h[0]");
  if (x.rows() < 1) throw ShapeError("input needs at least one token");
  std::vector<Tensor> outs;
  Tensor cur = x;
  for (int j = 0; j < card.l; ++j) {
    cur = LayerForward(cur, weights.layers[j], card.Layer(j));
    outs.push_back(cur);
  }
  return outs;
}

Tensor Forward(const EncoderWeights& weights, const Tensor& x) {
  return ForwardLayers(weights, x).back();
}

Tensor Forward(const ModelCard& card, const Tensor& x, std::uint64_t seed, const SimConfig& config) {
  return Forward(InitWeights(card, seed, config), x);
}

}  // namespace sim
}  // namespace hetnas
