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

#ifndef HETNAS_EXTERNAL_ORACLE_H_
#define HETNAS_EXTERNAL_ORACLE_H_

#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "hetnas/evaluator.h"

namespace hetnas {

struct ExternalOracleOptions {
  // Shell command started once per worker, or an http:// URL that receives
  // each request as a POST body.
  std::string endpoint;
  double timeout_seconds = 3600.0;
  int workers = 1;
};

// Speaks the JSON-lines evaluation protocol with an external evaluator.
// Protocol violations, timeouts and process exits become failure results;
// a subprocess that died or timed out is restarted on the next request.
class ExternalOracle : public Oracle {
 public:
  explicit ExternalOracle(ExternalOracleOptions options);
  ~ExternalOracle() override;

  ExternalOracle(const ExternalOracle&) = delete;
  ExternalOracle& operator=(const ExternalOracle&) = delete;

  EvaluationResult Evaluate(const EvaluationRequest& request) override;
  std::string kind() const override { return "external"; }

  bool is_http() const { return http_; }

 private:
  class Channel;

  EvaluationResult EvaluateHttp(const EvaluationRequest& request);
  EvaluationResult Exchange(Channel& channel, const EvaluationRequest& request);

  ExternalOracleOptions options_;
  bool http_ = false;
  std::vector<std::unique_ptr<Channel>> channels_;
  std::vector<bool> busy_;
  std::mutex mu_;
  std::condition_variable cv_;
};

// Parses one protocol line into a result for `expected_hash`; any violation
// yields a failure result describing it.
EvaluationResult ParseResultLine(const std::string& line, const GraphHash& expected_hash);

}  // namespace hetnas

#endif  // HETNAS_EXTERNAL_ORACLE_H_
