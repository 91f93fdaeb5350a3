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

#ifndef HETNAS_SURROGATE_H_
#define HETNAS_SURROGATE_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hetnas/records.h"
#include "hetnas/rng.h"
#include "json.hpp"

namespace hetnas {

enum class Activation { kTanh, kIdentity };

// Fully connected network. Batches are matrices with one sample per column.
class Mlp {
 public:
  Mlp() = default;
  // sizes = {input, hidden..., output}; Glorot-uniform weights, zero biases.
  Mlp(std::vector<int> sizes, Activation activation, Rng& rng);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(weights_.size()); }
  Activation activation() const { return activation_; }

  std::size_t num_params() const;
  // Layer by layer: weights (row-major) then bias.
  std::vector<double> Params() const;
  void SetParams(std::span<const double> params);

  // Dropout masks hold one matrix per hidden layer (width x batch) whose
  // entries multiply the activations; nullptr means no dropout.
  using Masks = std::vector<Eigen::MatrixXd>;
  Masks SampleMasks(Eigen::Index batch, double p_drop, Rng& rng) const;

  Eigen::MatrixXd Forward(const Eigen::MatrixXd& x, const Masks* masks = nullptr) const;

  // Backpropagates dL/dY through the network. Fills the flat parameter
  // gradient (same layout as Params) and, if non-null, dL/dX.
  Eigen::MatrixXd Backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& d_out,
                           std::vector<double>* param_grad, const Masks* masks = nullptr) const;

  // For a per-output functional s(Y) = sum_k s_k(y_k) with elementwise first
  // and second derivatives supplied by `derivs`, computes the input gradient
  // of s and the Hessian-vector product H v for each column pair (x, v).
  template <typename Derivs>
  void InputGradHvp(const Eigen::MatrixXd& x, const Eigen::MatrixXd& v, Derivs&& derivs,
                    Eigen::MatrixXd* grad, Eigen::MatrixXd* hvp) const;

  nlohmann::json ToJson() const;
  static Mlp FromJson(const nlohmann::json& j);

 private:
  struct Tape {
    std::vector<Eigen::MatrixXd> pre;   // pre-activation of each layer
    std::vector<Eigen::MatrixXd> post;  // input to each layer (post[0] = x)
  };
  Eigen::MatrixXd Run(const Eigen::MatrixXd& x, const Masks* masks, Tape* tape) const;
  Eigen::MatrixXd Act(const Eigen::MatrixXd& z) const;
  Eigen::MatrixXd ActDeriv(const Eigen::MatrixXd& z) const;
  Eigen::MatrixXd ActSecond(const Eigen::MatrixXd& z) const;

  std::vector<int> sizes_;
  Activation activation_ = Activation::kTanh;
  std::vector<Eigen::MatrixXd> weights_;  // out x in
  std::vector<Eigen::VectorXd> biases_;
};

inline constexpr double kSigmaFloor = 1e-6;

double Softplus(double z);
double Sigmoid(double z);

// Gaussian negative log-likelihood of one observation:
// (mu - o)^2 / (2 sigma^2) + ln(sigma^2) / 2.
double NpnLoss(double mu, double sigma, double o);

// Losses summed over the columns of `x` together with their flat parameter
// gradients. The mean-variance net has outputs (mu, s) with
// sigma = softplus(s) + kSigmaFloor.
double NpnLossAndGradient(const Mlp& net, const Eigen::MatrixXd& x, std::span<const double> o,
                          std::vector<double>* grad);
// Sum of squared errors of output 0 (optionally through softplus).
double SquaredLossAndGradient(const Mlp& net, const Eigen::MatrixXd& x,
                              std::span<const double> target, bool softplus_output,
                              const Mlp::Masks* masks, std::vector<double>* grad);

struct SurrogateConfig {
  std::vector<int> hidden = {64, 64};
  Activation activation = Activation::kTanh;
  double p_drop = 0.2;
  int n_mc = 20;
  double k1 = 0.5;
  double k2 = 0.5;
  int hessian_probes = 8;
  int epochs = 400;         // cold fit
  int refit_epochs = 50;    // warm refit
  double learning_rate = 5e-3;  // decays linearly to 5% within each fit
};

nlohmann::json SurrogateConfigToJson(const SurrogateConfig& config);
SurrogateConfig SurrogateConfigFromJson(const nlohmann::json& j);

struct Prediction {
  double mu = 0.0;
  double sigma = 0.0;
  double xi_hat = 0.0;
};

struct FitTrace {
  std::vector<double> npn, teacher, student;  // per-epoch losses
};

// Upper confidence bound mu + k1 sigma + k2 xi_hat.
inline double UcbValue(double mu, double sigma, double xi_hat, double k1, double k2) {
  return mu + k1 * sigma + k2 * xi_hat;
}

// The heteroscedastic surrogate: mean-variance net, MC-dropout teacher and
// the student that regresses the teacher's spread.
class Surrogate {
 public:
  Surrogate() = default;
  Surrogate(int input_dim, SurrogateConfig config, std::uint64_t seed);

  const SurrogateConfig& config() const { return config_; }
  SurrogateConfig& mutable_config() { return config_; }
  int input_dim() const { return input_dim_; }
  bool fitted() const { return fitted_; }

  // Fits all three nets on the corpus (warm-started after the first call).
  // Throws InvalidArgumentError for fewer than two records, DivergenceError
  // on a non-finite loss.
  FitTrace Fit(const std::vector<EvaluationRecord>& corpus);

  Prediction Predict(std::span<const double> x) const;
  double Ucb(std::span<const double> x) const { return Ucb(x, config_.k1, config_.k2); }
  double Ucb(std::span<const double> x, double k1, double k2) const;

  // Population standard deviation of n_mc dropout passes of the teacher.
  double Epistemic(std::span<const double> x, Rng& rng) const;
  double Epistemic(std::span<const double> x, int n_mc, Rng& rng) const;
  // Teacher output with dropout disabled.
  double TeacherMean(std::span<const double> x) const;

  // Batched UCB, analytic input gradient and Hutchinson Hessian diagonal for
  // each column of `x`.
  void UcbGradient(const Eigen::MatrixXd& x, double k1, double k2, int probes, Rng& rng,
                   Eigen::VectorXd* ucb, Eigen::MatrixXd* grad, Eigen::MatrixXd* hdiag) const;

  const Mlp& mean_variance() const { return f_; }
  const Mlp& teacher() const { return g_; }
  const Mlp& student() const { return h_; }
  Mlp& mutable_mean_variance() { return f_; }
  Mlp& mutable_teacher() { return g_; }
  Mlp& mutable_student() { return h_; }
  void set_fitted(bool fitted) { fitted_ = fitted; }

  // Checkpoint: {input_dim, seed, config, score_min, score_max, nets}.
  void WriteJson(std::ostream& out) const;
  static Surrogate ReadJson(std::istream& in);

  // Scores are fitted as given; these record the normalization applied by
  // the caller so a checkpoint is self-describing.
  double score_min = 0.0;
  double score_max = 1.0;

 private:
  int input_dim_ = 0;
  std::uint64_t seed_ = 0;
  SurrogateConfig config_;
  Mlp f_, g_, h_;
  bool fitted_ = false;
  std::uint64_t fit_count_ = 0;
};

// ---------------------------------------------------------------------------

template <typename Derivs>
void Mlp::InputGradHvp(const Eigen::MatrixXd& x, const Eigen::MatrixXd& v, Derivs&& derivs,
                       Eigen::MatrixXd* grad, Eigen::MatrixXd* hvp) const {
  Tape tape;
  const Eigen::MatrixXd y = Run(x, nullptr, &tape);
  const int nl = num_layers();
  // Forward tangents of pre-activations and layer inputs.
  std::vector<Eigen::MatrixXd> r_pre(nl), r_post(nl);
  r_post[0] = v;
  for (int k = 0; k < nl; ++k) {
    r_pre[k] = weights_[k] * r_post[k];
    if (k + 1 < nl) r_post[k + 1] = ActDeriv(tape.pre[k]).cwiseProduct(r_pre[k]);
  }
  Eigen::MatrixXd d1, d2;
  derivs(y, &d1, &d2);
  // Reverse pass and its tangent.
  Eigen::MatrixXd g = d1;                                // dS/dz_k
  Eigen::MatrixXd rg = d2.cwiseProduct(r_pre[nl - 1]);   // R{dS/dz_k}
  for (int k = nl - 1; k >= 0; --k) {
    Eigen::MatrixXd ga = weights_[k].transpose() * g;    // dS/dpost_k
    Eigen::MatrixXd rga = weights_[k].transpose() * rg;
    if (k == 0) {
      *grad = std::move(ga);
      *hvp = std::move(rga);
      return;
    }
    const Eigen::MatrixXd& z = tape.pre[k - 1];
    const Eigen::MatrixXd s1 = ActDeriv(z);
    rg = rga.cwiseProduct(s1) + ga.cwiseProduct(ActSecond(z)).cwiseProduct(r_pre[k - 1]);
    g = ga.cwiseProduct(s1);
  }
}

}  // namespace hetnas

#endif  // HETNAS_SURROGATE_H_
