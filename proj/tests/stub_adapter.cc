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

// Line-protocol evaluator for tests.
//
//   stub_adapter stub [seed]   score = first 8 hex digits of
//                              sha256("<seed>:<hash>") / 2^32,
//                              cost 1.0, or 0.25 with a transfer hint
//   stub_adapter echo          score 0.5 for every request
//   stub_adapter malformed     replies with a line that is not JSON
//   stub_adapter mismatch      replies with another hash
//   stub_adapter trailing      replies with valid JSON followed by junk
//   stub_adapter sleep         reads requests and never replies
//   stub_adapter exit          exits after reading one request
//   stub_adapter flaky         malformed reply to every third request

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include "hetnas/sha256.h"
#include "json.hpp"

using nlohmann::json;

namespace {

double StubScore(const std::string& hash, const std::string& seed) {
  const std::string digest = hetnas::Sha256Hex(seed + ":" + hash);
  return static_cast<double>(std::stoul(digest.substr(0, 8), nullptr, 16)) / 4294967296.0;
}

json Failure(const std::string& hash, const std::string& message) {
  return {{"hash", hash}, {"score", nullptr}, {"cost", 0.0}, {"source", "synthetic"},
          {"failure", message}};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "stub";
  const std::string seed = argc > 2 ? argv[2] : "0";
  std::ios::sync_with_stdio(false);
  std::string line;
  long count = 0;
  while (std::getline(std::cin, line)) {
    ++count;
    if (mode == "exit") return 3;
    if (mode == "sleep") {
      std::this_thread::sleep_for(std::chrono::seconds(60));
      continue;
    }
    json req;
    try {
      req = json::parse(line);
    } catch (const json::exception&) {
      std::cout << Failure("", "malformed request").dump() << "\n" << std::flush;
      continue;
    }
    const std::string hash = req.value("hash", "");
    if (mode == "malformed" || (mode == "flaky" && count % 3 == 0)) {
      std::cout << "{not json\n" << std::flush;
      continue;
    }
    json res = {{"hash", hash}, {"cost", 1.0}, {"source", "pretrain"}, {"failure", nullptr}};
    if (mode == "echo") {
      res["score"] = 0.5;
    } else if (mode == "mismatch") {
      res["hash"] = std::string(64, '0');
      res["score"] = 0.5;
    } else {
      res["score"] = StubScore(hash, seed);
      if (req.contains("transfer_hint") && !req["transfer_hint"].is_null()) {
        res["cost"] = 0.25;
        res["source"] = "transfer";
      }
    }
    std::cout << res.dump();
    if (mode == "trailing") std::cout << " junk";
    std::cout << "\n" << std::flush;
  }
  return 0;
}
