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

#include "hetnas/external_oracle.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "hetnas/error.h"
#include "httplib.h"

namespace hetnas {

EvaluationResult ParseResultLine(const std::string& line, const GraphHash& expected_hash) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    return EvaluationResult::Failure(expected_hash, std::string("malformed result line: ") + e.what());
  }
  try {
    EvaluationResult r = ResultFromJson(j);
    if (r.hash != expected_hash) {
      return EvaluationResult::Failure(expected_hash, "result hash does not match the request");
    }
    return r;
  } catch (const FormatError& e) {
    return EvaluationResult::Failure(expected_hash, e.what());
  }
}

// One long-lived subprocess connected through a pair of pipes.
class ExternalOracle::Channel {
 public:
  explicit Channel(std::string command) : command_(std::move(command)) {}
  ~Channel() { Stop(); }

  bool running() const { return pid_ > 0; }

  void Start() {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0) throw Error("pipe failed: " + std::string(std::strerror(errno)));
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw Error("pipe failed: " + std::string(std::strerror(errno)));
    }
    const pid_t pid = fork();
    if (pid < 0) throw Error("fork failed: " + std::string(std::strerror(errno)));
    if (pid == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    pid_ = pid;
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    buffer_.clear();
  }

  void Stop() {
    if (write_fd_ >= 0) close(write_fd_);
    if (read_fd_ >= 0) close(read_fd_);
    write_fd_ = read_fd_ = -1;
    if (pid_ > 0) {
      kill(pid_, SIGTERM);
      waitpid(pid_, nullptr, 0);
    }
    pid_ = -1;
    buffer_.clear();
  }

  // Writes one line; false if the process is gone.
  bool WriteLine(const std::string& line) {
    std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = write(write_fd_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  enum class ReadStatus { kOk, kTimeout, kClosed };

  ReadStatus ReadLine(double timeout_seconds, std::string* line) {
    using Clock = std::chrono::steady_clock;
    const auto deadline =
        Clock::now() + std::chrono::duration_cast<Clock::duration>(
                           std::chrono::duration<double>(timeout_seconds));
    while (true) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        *line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return ReadStatus::kOk;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (left.count() <= 0) return ReadStatus::kTimeout;
      pollfd pfd{read_fd_, POLLIN, 0};
      const int rc = poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
      if (rc < 0) {
        if (errno == EINTR) continue;
        return ReadStatus::kClosed;
      }
      if (rc == 0) return ReadStatus::kTimeout;
      char buf[4096];
      const ssize_t n = read(read_fd_, buf, sizeof buf);
      if (n < 0) {
        if (errno == EINTR) continue;
        return ReadStatus::kClosed;
      }
      if (n == 0) return ReadStatus::kClosed;
      buffer_.append(buf, static_cast<std::size_t>(n));
    }
  }

 private:
  std::string command_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
};

ExternalOracle::ExternalOracle(ExternalOracleOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) throw InvalidArgumentError("external oracle needs an endpoint");
  if (!(options_.timeout_seconds > 0.0)) throw InvalidArgumentError("timeout must be positive");
  http_ = options_.endpoint.rfind("http://", 0) == 0;
  const int n = std::max(1, options_.workers);
  if (!http_) {
    // A dead adapter must surface as a failure result, not a signal.
    signal(SIGPIPE, SIG_IGN);
    for (int i = 0; i < n; ++i) channels_.push_back(std::make_unique<Channel>(options_.endpoint));
  }
  busy_.assign(http_ ? 0 : n, false);
}

ExternalOracle::~ExternalOracle() = default;

EvaluationResult ExternalOracle::Evaluate(const EvaluationRequest& request) {
  if (http_) return EvaluateHttp(request);
  std::size_t slot = 0;
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] {
      for (std::size_t i = 0; i < busy_.size(); ++i) {
        if (!busy_[i]) {
          slot = i;
          return true;
        }
      }
      return false;
    });
    busy_[slot] = true;
  }
  EvaluationResult r = Exchange(*channels_[slot], request);
  {
    std::lock_guard lock(mu_);
    busy_[slot] = false;
  }
  cv_.notify_one();
  return r;
}

EvaluationResult ExternalOracle::Exchange(Channel& channel, const EvaluationRequest& request) {
  try {
    if (!channel.running()) channel.Start();
  } catch (const Error& e) {
    return EvaluationResult::Failure(request.hash, e.what());
  }
  if (!channel.WriteLine(RequestToJson(request).dump())) {
    channel.Stop();
    return EvaluationResult::Failure(request.hash, "external evaluator closed its input");
  }
  std::string line;
  switch (channel.ReadLine(options_.timeout_seconds, &line)) {
    case Channel::ReadStatus::kOk:
      return ParseResultLine(line, request.hash);
    case Channel::ReadStatus::kTimeout:
      channel.Stop();
      return EvaluationResult::Failure(request.hash, "external evaluator timed out");
    case Channel::ReadStatus::kClosed:
      channel.Stop();
      return EvaluationResult::Failure(request.hash, "external evaluator exited");
  }
  return EvaluationResult::Failure(request.hash, "unreachable");
}

EvaluationResult ExternalOracle::EvaluateHttp(const EvaluationRequest& request) {
  const std::string& url = options_.endpoint;
  const std::size_t host_start = std::strlen("http://");
  const std::size_t path_start = url.find('/', host_start);
  const std::string host = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
  httplib::Client client(host);
  const auto secs = static_cast<time_t>(options_.timeout_seconds);
  const auto usecs = static_cast<time_t>((options_.timeout_seconds - secs) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  auto res = client.Post(path, RequestToJson(request).dump() + "\n", "application/x-ndjson");
  if (!res) {
    return EvaluationResult::Failure(request.hash,
                                     "HTTP request failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    return EvaluationResult::Failure(request.hash, "HTTP status " + std::to_string(res->status));
  }
  std::string body = res->body;
  const auto nl = body.find('\n');
  if (nl != std::string::npos) {
    if (body.find_first_not_of(" \t\r\n", nl) != std::string::npos) {
      return EvaluationResult::Failure(request.hash, "trailing data after result line");
    }
    body.resize(nl);
  }
  return ParseResultLine(body, request.hash);
}

}  // namespace hetnas
