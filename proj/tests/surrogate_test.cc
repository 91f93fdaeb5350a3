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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hetnas/error.h"
#include "hetnas/rng.h"
#include "test_support.h"

namespace hetnas {
namespace {

using namespace test;

TEST(Surrogate, ParameterGradientsMatchFiniteDifferences) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const int in = 1 + static_cast<int>(rng.Below(5));
    const int batch = 1 + static_cast<int>(rng.Below(4));
    const Eigen::MatrixXd x = RandomBatch(rng, in, batch);
    const auto o = RandomTargets(rng, batch);

    // Mean-variance net under the NPN loss.
    Mlp f = RandomNet(rng, in, 2);
    std::vector<double> grad;
    NpnLossAndGradient(f, x, o, &grad);
    auto params = f.Params();
    ASSERT_EQ(grad.size(), params.size());
    for (std::size_t k = 0; k < params.size(); ++k) {
      Mlp plus = f, minus = f;
      auto p = params;
      p[k] += kStep;
      plus.SetParams(p);
      p[k] -= 2 * kStep;
      minus.SetParams(p);
      const double fd = (NpnLossAndGradient(plus, x, o, nullptr) -
                         NpnLossAndGradient(minus, x, o, nullptr)) / (2 * kStep);
      ASSERT_LT(RelErr(grad[k], fd), kRelTol) << "net " << t << " param " << k;
    }

    // Single-output net under the squared loss, with and without softplus
    // and a fixed dropout mask.
    Mlp g = RandomNet(rng, in, 1);
    const auto masks = g.SampleMasks(batch, 0.3, rng);
    for (bool softplus : {false, true}) {
      for (const Mlp::Masks* m : {static_cast<const Mlp::Masks*>(nullptr), &masks}) {
        SquaredLossAndGradient(g, x, o, softplus, m, &grad);
        params = g.Params();
        for (std::size_t k = 0; k < params.size(); ++k) {
          Mlp plus = g, minus = g;
          auto p = params;
          p[k] += kStep;
          plus.SetParams(p);
          p[k] -= 2 * kStep;
          minus.SetParams(p);
          const double fd = (SquaredLossAndGradient(plus, x, o, softplus, m, nullptr) -
                             SquaredLossAndGradient(minus, x, o, softplus, m, nullptr)) /
                            (2 * kStep);
          ASSERT_LT(RelErr(grad[k], fd), kRelTol) << "net " << t << " param " << k;
        }
      }
    }
  }
}

TEST(Surrogate, InputGradientsMatchFiniteDifferences) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const int in = 1 + static_cast<int>(rng.Below(6));
    const int out = 1 + static_cast<int>(rng.Below(3));
    Mlp net = RandomNet(rng, in, out, t % 4 == 3 ? Activation::kIdentity : Activation::kTanh);
    const Eigen::MatrixXd x = RandomBatch(rng, in, 1);
    const Eigen::MatrixXd w = RandomBatch(rng, out, 1);  // dL/dY of L = w . Y
    std::vector<double> pg;
    const Eigen::MatrixXd dx = net.Backward(x, w, &pg);
    for (int i = 0; i < in; ++i) {
      Eigen::MatrixXd xp = x, xm = x;
      xp(i, 0) += kStep;
      xm(i, 0) -= kStep;
      const double fd = (w.cwiseProduct(net.Forward(xp)).sum() -
                         w.cwiseProduct(net.Forward(xm)).sum()) / (2 * kStep);
      ASSERT_LT(RelErr(dx(i, 0), fd), kRelTol) << "net " << t << " input " << i;
    }
  }
}

TEST(Surrogate, UcbGradientAndHessianMatchFiniteDifferences) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const int d = 2 + static_cast<int>(rng.Below(4));
    SurrogateConfig config;
    config.hidden = {static_cast<int>(3 + rng.Below(5)), static_cast<int>(3 + rng.Below(5))};
    Surrogate s(d, config, 100 + t);
    for (Mlp* net : {&s.mutable_mean_variance(), &s.mutable_student()}) {
      auto p = net->Params();
      for (auto& v : p) v += 0.3 * rng.Normal();
      net->SetParams(p);
    }
    const double k1 = rng.Uniform(0.1, 1.0), k2 = rng.Uniform(0.1, 1.0);
    const Eigen::MatrixXd x = RandomBatch(rng, d, 1);
    Eigen::VectorXd ucb;
    Eigen::MatrixXd grad, hdiag;
    // Many probes so the Hutchinson estimate is compared on average.
    Rng probe_rng(7);
    s.UcbGradient(x, k1, k2, 1, probe_rng, &ucb, &grad, &hdiag);
    std::vector<double> xv(x.data(), x.data() + d);
    EXPECT_NEAR(ucb(0), s.Ucb(xv, k1, k2), 1e-12);
    auto ucb_at = [&](const std::vector<double>& p) { return s.Ucb(p, k1, k2); };
    for (int i = 0; i < d; ++i) {
      auto xp = xv, xm = xv;
      xp[i] += kStep;
      xm[i] -= kStep;
      const double fd = (ucb_at(xp) - ucb_at(xm)) / (2 * kStep);
      ASSERT_LT(RelErr(grad(i, 0), fd), kRelTol) << "net " << t << " input " << i;
    }
    // The Hessian diagonal from finite differences of the analytic gradient,
    // compared with the exact Hessian-vector products behind the estimate.
    Eigen::MatrixXd exact_hv(d, d);
    for (int i = 0; i < d; ++i) {
      Eigen::MatrixXd xp = x, xm = x;
      xp(i, 0) += kStep;
      xm(i, 0) -= kStep;
      Eigen::VectorXd u;
      Eigen::MatrixXd gp, gm, unused;
      Rng r1(1), r2(1);
      s.UcbGradient(xp, k1, k2, 1, r1, &u, &gp, &unused);
      s.UcbGradient(xm, k1, k2, 1, r2, &u, &gm, &unused);
      exact_hv.col(i) = (gp - gm) / (2 * kStep);
    }
    Rng many(9);
    s.UcbGradient(x, k1, k2, 4000, many, &ucb, &grad, &hdiag);
    for (int i = 0; i < d; ++i) {
      // Rademacher probes: E[v * Hv] = diag(H); the estimate carries noise
      // from off-diagonal terms of order |H| / sqrt(probes).
      const double scale = exact_hv.cwiseAbs().maxCoeff() + 1e-9;
      EXPECT_NEAR(hdiag(i, 0), exact_hv(i, i), 0.1 * scale) << "net " << t;
    }
  }
}

TEST(Surrogate, HessianVectorProductIsExact) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const int d = 1 + static_cast<int>(rng.Below(5));
    Mlp net = RandomNet(rng, d, 1);
    const Eigen::MatrixXd x = RandomBatch(rng, d, 1);
    const Eigen::MatrixXd v = RandomBatch(rng, d, 1);
    // s(y) = y^3 / 3 exercises the second derivative of the functional.
    auto derivs = [](const Eigen::MatrixXd& y, Eigen::MatrixXd* d1, Eigen::MatrixXd* d2) {
      *d1 = y.array().square().matrix();
      *d2 = (2.0 * y.array()).matrix();
    };
    Eigen::MatrixXd g, hv;
    net.InputGradHvp(x, v, derivs, &g, &hv);
    auto grad_at = [&](const Eigen::MatrixXd& p) {
      Eigen::MatrixXd gg, hh;
      net.InputGradHvp(p, v, derivs, &gg, &hh);
      return gg;
    };
    const Eigen::MatrixXd fd = (grad_at(x + kStep * v) - grad_at(x - kStep * v)) / (2 * kStep);
    for (int i = 0; i < d; ++i) ASSERT_LT(RelErr(hv(i, 0), fd(i, 0)), kRelTol) << t;
  }
}

TEST(Surrogate, LossFixtures) {
  EXPECT_EQ(NpnLoss(0.3, 1.0, 0.3), 0.0);
  EXPECT_EQ(NpnLoss(-2.0, 1.0, -2.0), 0.0);
  EXPECT_DOUBLE_EQ(NpnLoss(1.0, 2.0, 0.0), 1.0 / 8.0 + std::log(4.0) / 2.0);
  EXPECT_EQ(UcbValue(0.7, 0.1, 0.2, 0.5, 0.5), 0.85);
  EXPECT_DOUBLE_EQ(Softplus(0.0), std::log(2.0));
  EXPECT_DOUBLE_EQ(Softplus(800.0), 800.0);
  EXPECT_DOUBLE_EQ(Sigmoid(0.0), 0.5);
}

TEST(Surrogate, DropoutOffGivesZeroEpistemicSpread) {
  SurrogateConfig config;
  config.p_drop = 0.0;
  Surrogate s(3, config, 5);
  Rng rng(1);
  const double x[] = {0.1, -0.4, 0.9};
  EXPECT_EQ(s.Epistemic(x, rng), 0.0);
  config.p_drop = 0.3;
  Surrogate t(3, config, 5);
  EXPECT_GT(t.Epistemic(x, rng), 0.0);
}

TEST(Surrogate, UcbCombinesTheThreeHeads) {
  SurrogateConfig config;
  config.k1 = 0.5;
  config.k2 = 0.25;
  Surrogate s(2, config, 3);
  const double x[] = {0.3, 0.6};
  const Prediction p = s.Predict(x);
  EXPECT_GE(p.sigma, kSigmaFloor);
  EXPECT_GE(p.xi_hat, 0.0);
  EXPECT_DOUBLE_EQ(s.Ucb(x), p.mu + 0.5 * p.sigma + 0.25 * p.xi_hat);
  EXPECT_DOUBLE_EQ(s.Ucb(x, 1.0, 0.0), p.mu + p.sigma);
}

std::vector<EvaluationRecord> ToyCorpus(int n, Rng& rng) {
  std::vector<EvaluationRecord> c;
  for (int i = 0; i < n; ++i) {
    EvaluationRecord r;
    r.hash = GraphHash{"h" + std::to_string(i)};
    const double a = rng.Uniform(-1, 1), b = rng.Uniform(-1, 1);
    r.x = {a, b};
    r.score = 0.5 + 0.3 * std::sin(2 * a) * std::cos(b);
    c.push_back(r);
  }
  return c;
}

TEST(Surrogate, FitReducesLossesAndPredicts) {
  Rng rng(6);
  const auto corpus = ToyCorpus(60, rng);
  SurrogateConfig config;
  config.epochs = 800;
  Surrogate s(2, config, 7);
  EXPECT_FALSE(s.fitted());
  const FitTrace trace = s.Fit(corpus);
  EXPECT_TRUE(s.fitted());
  ASSERT_EQ(trace.npn.size(), 800u);
  EXPECT_LT(trace.npn.back(), trace.npn.front());
  EXPECT_LT(trace.teacher.back(), trace.teacher.front());
  double err = 0.0;
  for (const auto& r : corpus) err += std::abs(s.Predict(r.x).mu - r.score);
  EXPECT_LT(err / corpus.size(), 0.05);
  // Warm refit uses the shorter schedule.
  const FitTrace again = s.Fit(corpus);
  EXPECT_EQ(static_cast<int>(again.npn.size()), config.refit_epochs);
}

TEST(Surrogate, FitIsDeterministicAndValidatesInput) {
  Rng rng(8);
  const auto corpus = ToyCorpus(20, rng);
  SurrogateConfig config;
  config.epochs = 50;
  Surrogate a(2, config, 11), b(2, config, 11);
  a.Fit(corpus);
  b.Fit(corpus);
  EXPECT_EQ(a.mean_variance().Params(), b.mean_variance().Params());
  EXPECT_EQ(a.student().Params(), b.student().Params());
  EXPECT_THROW(a.Fit({corpus[0]}), InvalidArgumentError);
  auto bad = corpus;
  bad[0].x = {1.0};
  EXPECT_THROW(a.Fit(bad), ShapeError);
}

TEST(Surrogate, CheckpointRoundTrip) {
  Rng rng(9);
  const auto corpus = ToyCorpus(20, rng);
  SurrogateConfig config;
  config.epochs = 30;
  Surrogate s(2, config, 12);
  s.Fit(corpus);
  s.score_min = 0.2;
  s.score_max = 0.9;
  std::stringstream ss;
  s.WriteJson(ss);
  const Surrogate back = Surrogate::ReadJson(ss);
  EXPECT_TRUE(back.fitted());
  EXPECT_DOUBLE_EQ(back.score_min, 0.2);
  EXPECT_DOUBLE_EQ(back.score_max, 0.9);
  EXPECT_EQ(back.mean_variance().Params(), s.mean_variance().Params());
  const double x[] = {0.2, 0.1};
  EXPECT_DOUBLE_EQ(back.Ucb(x), s.Ucb(x));
  EXPECT_EQ(SurrogateConfigToJson(SurrogateConfigFromJson(SurrogateConfigToJson(config))),
            SurrogateConfigToJson(config));
  std::stringstream bad("{\"input_dim\": true}");
  EXPECT_THROW(Surrogate::ReadJson(bad), FormatError);
}

TEST(Surrogate, MlpJsonAndShapes) {
  Rng rng(10);
  const Mlp net = RandomNet(rng, 3, 2);
  EXPECT_EQ(net.input_dim(), 3);
  EXPECT_EQ(net.output_dim(), 2);
  const Mlp back = Mlp::FromJson(net.ToJson());
  EXPECT_EQ(back.Params(), net.Params());
  EXPECT_EQ(back.sizes(), net.sizes());
  auto p = net.Params();
  p.pop_back();
  Mlp copy = net;
  EXPECT_THROW(copy.SetParams(p), ShapeError);
  EXPECT_THROW(net.Forward(Eigen::MatrixXd::Zero(2, 1)), ShapeError);
}

}  // namespace
}  // namespace hetnas
