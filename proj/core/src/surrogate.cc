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

#include "hetnas/surrogate.h"

#include <cmath>
#include <istream>
#include <ostream>

#include "hetnas/error.h"

namespace hetnas {

std::string_view ScoreSourceName(ScoreSource source) {
  switch (source) {
    case ScoreSource::kPretrain:
      return "pretrain";
    case ScoreSource::kTransfer:
      return "transfer";
    case ScoreSource::kReplay:
      return "replay";
    case ScoreSource::kSynthetic:
      return "synthetic";
  }
  return "synthetic";
}

ScoreSource ParseScoreSource(std::string_view name) {
  if (name == "pretrain") return ScoreSource::kPretrain;
  if (name == "transfer") return ScoreSource::kTransfer;
  if (name == "replay") return ScoreSource::kReplay;
  if (name == "synthetic") return ScoreSource::kSynthetic;
  throw FormatError("unknown score source: " + std::string(name));
}

double Softplus(double z) {
  // log1p(exp(z)) without overflow.
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Mlp::Mlp(std::vector<int> sizes, Activation activation, Rng& rng)
    : sizes_(std::move(sizes)), activation_(activation) {
  if (sizes_.size() < 2) throw InvalidArgumentError("an MLP needs input and output sizes");
  for (int s : sizes_) {
    if (s <= 0) throw InvalidArgumentError("MLP layer sizes must be positive");
  }
  for (std::size_t k = 0; k + 1 < sizes_.size(); ++k) {
    const int in = sizes_[k], out = sizes_[k + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    Eigen::MatrixXd w(out, in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) w(r, c) = rng.Uniform(-limit, limit);
    }
    weights_.push_back(std::move(w));
    biases_.push_back(Eigen::VectorXd::Zero(out));
  }
}

std::size_t Mlp::num_params() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < weights_.size(); ++k) n += weights_[k].size() + biases_[k].size();
  return n;
}

std::vector<double> Mlp::Params() const {
  std::vector<double> out;
  out.reserve(num_params());
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    const auto& w = weights_[k];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) out.push_back(w(r, c));
    }
    for (Eigen::Index r = 0; r < biases_[k].size(); ++r) out.push_back(biases_[k](r));
  }
  return out;
}

void Mlp::SetParams(std::span<const double> params) {
  if (params.size() != num_params()) throw ShapeError("parameter vector size mismatch");
  std::size_t i = 0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    auto& w = weights_[k];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = params[i++];
    }
    for (Eigen::Index r = 0; r < biases_[k].size(); ++r) biases_[k](r) = params[i++];
  }
}

Mlp::Masks Mlp::SampleMasks(Eigen::Index batch, double p_drop, Rng& rng) const {
  Masks masks;
  const double keep = 1.0 - p_drop;
  for (std::size_t k = 1; k + 1 < sizes_.size(); ++k) {
    Eigen::MatrixXd m(sizes_[k], batch);
    for (Eigen::Index c = 0; c < batch; ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        // Inverted dropout keeps the expected activation unchanged.
        m(r, c) = p_drop > 0.0 ? (rng.Uniform() < keep ? 1.0 / keep : 0.0) : 1.0;
      }
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

Eigen::MatrixXd Mlp::Act(const Eigen::MatrixXd& z) const {
  if (activation_ == Activation::kIdentity) return z;
  return z.array().tanh().matrix();
}

Eigen::MatrixXd Mlp::ActDeriv(const Eigen::MatrixXd& z) const {
  if (activation_ == Activation::kIdentity) return Eigen::MatrixXd::Ones(z.rows(), z.cols());
  const Eigen::ArrayXXd t = z.array().tanh();
  return (1.0 - t.square()).matrix();
}

Eigen::MatrixXd Mlp::ActSecond(const Eigen::MatrixXd& z) const {
  if (activation_ == Activation::kIdentity) return Eigen::MatrixXd::Zero(z.rows(), z.cols());
  const Eigen::ArrayXXd t = z.array().tanh();
  return (-2.0 * t * (1.0 - t.square())).matrix();
}

Eigen::MatrixXd Mlp::Run(const Eigen::MatrixXd& x, const Masks* masks, Tape* tape) const {
  if (x.rows() != input_dim()) throw ShapeError("MLP input dimension mismatch");
  const int nl = num_layers();
  Eigen::MatrixXd a = x;
  if (tape) {
    tape->pre.resize(nl);
    tape->post.resize(nl);
  }
  for (int k = 0; k < nl; ++k) {
    Eigen::MatrixXd z = weights_[k] * a;
    z.colwise() += biases_[k];
    if (tape) tape->post[k] = a;
    if (k + 1 == nl) {
      if (tape) tape->pre[k] = z;
      return z;
    }
    a = Act(z);
    if (masks) a = a.cwiseProduct((*masks)[k]);
    if (tape) tape->pre[k] = std::move(z);
  }
  return a;
}

Eigen::MatrixXd Mlp::Forward(const Eigen::MatrixXd& x, const Masks* masks) const {
  return Run(x, masks, nullptr);
}

Eigen::MatrixXd Mlp::Backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& d_out,
                              std::vector<double>* param_grad, const Masks* masks) const {
  Tape tape;
  Run(x, masks, &tape);
  const int nl = num_layers();
  std::vector<Eigen::MatrixXd> gw(nl);
  std::vector<Eigen::VectorXd> gb(nl);
  Eigen::MatrixXd g = d_out;
  Eigen::MatrixXd gx;
  for (int k = nl - 1; k >= 0; --k) {
    gw[k] = g * tape.post[k].transpose();
    gb[k] = g.rowwise().sum();
    Eigen::MatrixXd ga = weights_[k].transpose() * g;
    if (k == 0) {
      gx = std::move(ga);
      break;
    }
    g = ga.cwiseProduct(ActDeriv(tape.pre[k - 1]));
    if (masks) g = g.cwiseProduct((*masks)[k - 1]);
  }
  if (param_grad) {
    param_grad->clear();
    param_grad->reserve(num_params());
    for (int k = 0; k < nl; ++k) {
      for (Eigen::Index r = 0; r < gw[k].rows(); ++r) {
        for (Eigen::Index c = 0; c < gw[k].cols(); ++c) param_grad->push_back(gw[k](r, c));
      }
      for (Eigen::Index r = 0; r < gb[k].size(); ++r) param_grad->push_back(gb[k](r));
    }
  }
  return gx;
}

nlohmann::json Mlp::ToJson() const {
  return {{"sizes", sizes_},
          {"activation", activation_ == Activation::kTanh ? "tanh" : "identity"},
          {"params", Params()}};
}

Mlp Mlp::FromJson(const nlohmann::json& j) {
  const std::string act = j.at("activation").get<std::string>();
  if (act != "tanh" && act != "identity") throw FormatError("unknown activation: " + act);
  Rng rng(0);
  Mlp net(j.at("sizes").get<std::vector<int>>(),
          act == "tanh" ? Activation::kTanh : Activation::kIdentity, rng);
  net.SetParams(j.at("params").get<std::vector<double>>());
  return net;
}

double NpnLoss(double mu, double sigma, double o) {
  const double r = mu - o;
  return r * r / (2.0 * sigma * sigma) + 0.5 * std::log(sigma * sigma);
}

double NpnLossAndGradient(const Mlp& net, const Eigen::MatrixXd& x, std::span<const double> o,
                          std::vector<double>* grad) {
  if (net.output_dim() != 2) throw ShapeError("mean-variance net needs two outputs");
  if (static_cast<Eigen::Index>(o.size()) != x.cols()) throw ShapeError("target count mismatch");
  const Eigen::MatrixXd y = net.Forward(x);
  Eigen::MatrixXd d(2, x.cols());
  double loss = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double mu = y(0, c);
    const double sigma = Softplus(y(1, c)) + kSigmaFloor;
    const double r = mu - o[c];
    loss += NpnLoss(mu, sigma, o[c]);
    d(0, c) = r / (sigma * sigma);
    // dL/dsigma = -r^2/sigma^3 + 1/sigma; dsigma/ds = sigmoid(s).
    d(1, c) = (-r * r / (sigma * sigma * sigma) + 1.0 / sigma) * Sigmoid(y(1, c));
  }
  if (grad) net.Backward(x, d, grad);
  return loss;
}

double SquaredLossAndGradient(const Mlp& net, const Eigen::MatrixXd& x,
                              std::span<const double> target, bool softplus_output,
                              const Mlp::Masks* masks, std::vector<double>* grad) {
  if (static_cast<Eigen::Index>(target.size()) != x.cols()) {
    throw ShapeError("target count mismatch");
  }
  const Eigen::MatrixXd y = net.Forward(x, masks);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(net.output_dim(), x.cols());
  double loss = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double out = softplus_output ? Softplus(y(0, c)) : y(0, c);
    const double r = out - target[c];
    loss += r * r;
    d(0, c) = 2.0 * r * (softplus_output ? Sigmoid(y(0, c)) : 1.0);
  }
  if (grad) net.Backward(x, d, grad, masks);
  return loss;
}

namespace {

// Adam over a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

  void set_lr(double lr) { lr_ = lr; }

  void Step(std::vector<double>& params, const std::vector<double>& grad) {
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + kEps);
    }
  }

 private:
  double lr_;
  std::uint64_t t_ = 0;
  std::vector<double> m_, v_;
};

void CheckFinite(double loss, const char* what, int epoch) {
  if (!std::isfinite(loss)) {
    throw DivergenceError(std::string(what) + " loss became non-finite at epoch " +
                          std::to_string(epoch));
  }
}

Eigen::MatrixXd ToColumn(std::span<const double> x) {
  Eigen::MatrixXd m(x.size(), 1);
  for (std::size_t i = 0; i < x.size(); ++i) m(i, 0) = x[i];
  return m;
}

}  // namespace

nlohmann::json SurrogateConfigToJson(const SurrogateConfig& c) {
  return {{"hidden", c.hidden},
          {"activation", c.activation == Activation::kTanh ? "tanh" : "identity"},
          {"p_drop", c.p_drop},
          {"n_mc", c.n_mc},
          {"k1", c.k1},
          {"k2", c.k2},
          {"hessian_probes", c.hessian_probes},
          {"epochs", c.epochs},
          {"refit_epochs", c.refit_epochs},
          {"learning_rate", c.learning_rate}};
}

SurrogateConfig SurrogateConfigFromJson(const nlohmann::json& j) {
  SurrogateConfig c;
  c.hidden = j.value("hidden", c.hidden);
  c.activation = j.value("activation", std::string("tanh")) == "identity" ? Activation::kIdentity
                                                                          : Activation::kTanh;
  c.p_drop = j.value("p_drop", c.p_drop);
  c.n_mc = j.value("n_mc", c.n_mc);
  c.k1 = j.value("k1", c.k1);
  c.k2 = j.value("k2", c.k2);
  c.hessian_probes = j.value("hessian_probes", c.hessian_probes);
  c.epochs = j.value("epochs", c.epochs);
  c.refit_epochs = j.value("refit_epochs", c.refit_epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  return c;
}

Surrogate::Surrogate(int input_dim, SurrogateConfig config, std::uint64_t seed)
    : input_dim_(input_dim), seed_(seed), config_(std::move(config)) {
  if (input_dim <= 0) throw InvalidArgumentError("surrogate input dimension must be positive");
  if (!(config_.p_drop >= 0.0 && config_.p_drop < 1.0)) {
    throw InvalidArgumentError("dropout probability must lie in [0, 1)");
  }
  if (config_.n_mc < 1) throw InvalidArgumentError("n_mc must be positive");
  auto sizes = [&](int out) {
    std::vector<int> s = {input_dim};
    s.insert(s.end(), config_.hidden.begin(), config_.hidden.end());
    s.push_back(out);
    return s;
  };
  Rng init(MixSeed(seed, 0x5eed));
  f_ = Mlp(sizes(2), config_.activation, init);
  g_ = Mlp(sizes(1), config_.activation, init);
  h_ = Mlp(sizes(1), config_.activation, init);
}

FitTrace Surrogate::Fit(const std::vector<EvaluationRecord>& corpus) {
  if (corpus.size() < 2) throw InvalidArgumentError("surrogate fit needs at least two records");
  const Eigen::Index n = static_cast<Eigen::Index>(corpus.size());
  Eigen::MatrixXd x(input_dim_, n);
  std::vector<double> o(corpus.size());
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto& rec = corpus[c];
    if (static_cast<int>(rec.x.size()) != input_dim_) throw ShapeError("record dimension mismatch");
    for (int r = 0; r < input_dim_; ++r) x(r, c) = rec.x[r];
    if (!std::isfinite(rec.score)) throw InvalidArgumentError("non-finite score in corpus");
    o[c] = rec.score;
  }
  const int epochs = fitted_ ? config_.refit_epochs : config_.epochs;
  Rng rng(MixSeed(seed_, ++fit_count_));
  const double inv_n = 1.0 / static_cast<double>(n);
  FitTrace trace;
  std::vector<double> grad;
  // Linear step-size decay to a twentieth over each stage.
  auto lr_at = [&](int e) {
    const double frac = epochs > 1 ? static_cast<double>(e) / (epochs - 1) : 1.0;
    return config_.learning_rate * (1.0 - 0.95 * frac);
  };

  {
    std::vector<double> p = f_.Params();
    Adam opt(p.size(), config_.learning_rate);
    for (int e = 0; e < epochs; ++e) {
      const double loss = NpnLossAndGradient(f_, x, o, &grad) * inv_n;
      CheckFinite(loss, "mean-variance", e);
      for (double& gv : grad) gv *= inv_n;
      opt.set_lr(lr_at(e));
      opt.Step(p, grad);
      f_.SetParams(p);
      trace.npn.push_back(loss);
    }
  }
  {
    std::vector<double> p = g_.Params();
    Adam opt(p.size(), config_.learning_rate);
    for (int e = 0; e < epochs; ++e) {
      const Mlp::Masks masks = g_.SampleMasks(n, config_.p_drop, rng);
      const double loss = SquaredLossAndGradient(g_, x, o, false, &masks, &grad) * inv_n;
      CheckFinite(loss, "teacher", e);
      for (double& gv : grad) gv *= inv_n;
      opt.set_lr(lr_at(e));
      opt.Step(p, grad);
      g_.SetParams(p);
      trace.teacher.push_back(loss);
    }
  }
  std::vector<double> xi(corpus.size());
  for (Eigen::Index c = 0; c < n; ++c) xi[c] = Epistemic(corpus[c].x, config_.n_mc, rng);
  {
    std::vector<double> p = h_.Params();
    Adam opt(p.size(), config_.learning_rate);
    for (int e = 0; e < epochs; ++e) {
      const double loss = SquaredLossAndGradient(h_, x, xi, true, nullptr, &grad) * inv_n;
      CheckFinite(loss, "student", e);
      for (double& gv : grad) gv *= inv_n;
      opt.set_lr(lr_at(e));
      opt.Step(p, grad);
      h_.SetParams(p);
      trace.student.push_back(loss);
    }
  }
  fitted_ = true;
  return trace;
}

Prediction Surrogate::Predict(std::span<const double> x) const {
  const Eigen::MatrixXd col = ToColumn(x);
  const Eigen::MatrixXd y = f_.Forward(col);
  const Eigen::MatrixXd z = h_.Forward(col);
  return {y(0, 0), Softplus(y(1, 0)) + kSigmaFloor, Softplus(z(0, 0))};
}

double Surrogate::Ucb(std::span<const double> x, double k1, double k2) const {
  const Prediction p = Predict(x);
  return UcbValue(p.mu, p.sigma, p.xi_hat, k1, k2);
}

double Surrogate::Epistemic(std::span<const double> x, Rng& rng) const {
  return Epistemic(x, config_.n_mc, rng);
}

double Surrogate::Epistemic(std::span<const double> x, int n_mc, Rng& rng) const {
  if (n_mc < 1) throw InvalidArgumentError("n_mc must be positive");
  if (config_.p_drop == 0.0) return 0.0;
  Eigen::MatrixXd cols(input_dim_, n_mc);
  for (int c = 0; c < n_mc; ++c) {
    for (int r = 0; r < input_dim_; ++r) cols(r, c) = x[r];
  }
  const Mlp::Masks masks = g_.SampleMasks(n_mc, config_.p_drop, rng);
  const Eigen::MatrixXd y = g_.Forward(cols, &masks);
  const double mean = y.row(0).mean();
  const double var = (y.row(0).array() - mean).square().mean();
  return std::sqrt(var);
}

double Surrogate::TeacherMean(std::span<const double> x) const {
  return g_.Forward(ToColumn(x))(0, 0);
}

void Surrogate::UcbGradient(const Eigen::MatrixXd& x, double k1, double k2, int probes, Rng& rng,
                            Eigen::VectorXd* ucb, Eigen::MatrixXd* grad,
                            Eigen::MatrixXd* hdiag) const {
  if (probes < 1) throw InvalidArgumentError("Hessian estimation needs at least one probe");
  const Eigen::Index b = x.cols(), d = x.rows();
  const Eigen::Index cols = b * probes;
  Eigen::MatrixXd xt(d, cols), v(d, cols);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (int p = 0; p < probes; ++p) {
      xt.col(i * probes + p) = x.col(i);
      for (Eigen::Index r = 0; r < d; ++r) v(r, i * probes + p) = rng.Rademacher();
    }
  }
  auto f_derivs = [k1](const Eigen::MatrixXd& y, Eigen::MatrixXd* d1, Eigen::MatrixXd* d2) {
    d1->setZero(y.rows(), y.cols());
    d2->setZero(y.rows(), y.cols());
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      const double s = Sigmoid(y(1, c));
      (*d1)(0, c) = 1.0;
      (*d1)(1, c) = k1 * s;
      (*d2)(1, c) = k1 * s * (1.0 - s);
    }
  };
  auto h_derivs = [k2](const Eigen::MatrixXd& y, Eigen::MatrixXd* d1, Eigen::MatrixXd* d2) {
    d1->setZero(y.rows(), y.cols());
    d2->setZero(y.rows(), y.cols());
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      const double s = Sigmoid(y(0, c));
      (*d1)(0, c) = k2 * s;
      (*d2)(0, c) = k2 * s * (1.0 - s);
    }
  };
  Eigen::MatrixXd gf, hf, gh, hh;
  f_.InputGradHvp(xt, v, f_derivs, &gf, &hf);
  h_.InputGradHvp(xt, v, h_derivs, &gh, &hh);
  const Eigen::MatrixXd g_all = gf + gh;
  const Eigen::MatrixXd zhz = v.cwiseProduct(hf + hh);
  grad->resize(d, b);
  hdiag->resize(d, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    grad->col(i) = g_all.col(i * probes);
    hdiag->col(i) = zhz.middleCols(i * probes, probes).rowwise().mean();
  }
  if (ucb) {
    const Eigen::MatrixXd y = f_.Forward(x);
    const Eigen::MatrixXd z = h_.Forward(x);
    ucb->resize(b);
    for (Eigen::Index i = 0; i < b; ++i) {
      (*ucb)(i) = UcbValue(y(0, i), Softplus(y(1, i)) + kSigmaFloor, Softplus(z(0, i)), k1, k2);
    }
  }
}

void Surrogate::WriteJson(std::ostream& out) const {
  nlohmann::json j = {{"input_dim", input_dim_},
                      {"seed", seed_},
                      {"config", SurrogateConfigToJson(config_)},
                      {"fitted", fitted_},
                      {"fit_count", fit_count_},
                      {"score_min", score_min},
                      {"score_max", score_max},
                      {"nets",
                       {{"mean_variance", f_.ToJson()},
                        {"teacher", g_.ToJson()},
                        {"student", h_.ToJson()}}}};
  out << j.dump() << '\n';
}

Surrogate Surrogate::ReadJson(std::istream& in) {
  try {
    const auto j = nlohmann::json::parse(in);
    Surrogate s(j.at("input_dim").get<int>(), SurrogateConfigFromJson(j.at("config")),
                j.at("seed").get<std::uint64_t>());
    const auto& nets = j.at("nets");
    s.f_ = Mlp::FromJson(nets.at("mean_variance"));
    s.g_ = Mlp::FromJson(nets.at("teacher"));
    s.h_ = Mlp::FromJson(nets.at("student"));
    s.fitted_ = j.value("fitted", true);
    s.fit_count_ = j.value("fit_count", std::uint64_t{0});
    s.score_min = j.value("score_min", 0.0);
    s.score_max = j.value("score_max", 1.0);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed surrogate checkpoint: ") + e.what());
  }
}

}  // namespace hetnas
