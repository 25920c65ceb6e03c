// Copyright 2026 The tsenas Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <deque>

#include "tsenas/evaluation.hpp"

namespace tsenas {

struct ExternalEvaluator::Worker {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  ProtocolReader reader;
  std::optional<std::size_t> pending;  // index into the current batch

  ~Worker() {
    if (to_child >= 0) ::close(to_child);
    if (from_child >= 0) ::close(from_child);
    if (pid > 0) {
      int status = 0;
      ::waitpid(pid, &status, 0);
    }
  }
};

namespace {

void write_all(int fd, const std::string& data) {
  std::size_t written = 0;
  while (written < data.size()) {
    const ssize_t n = ::write(fd, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw EvaluatorError(std::string("worker write failed: ") +
                           std::strerror(errno));
    }
    written += static_cast<std::size_t>(n);
  }
}

}  // namespace

ExternalEvaluator::ExternalEvaluator(std::string command,
                                     std::string config_path, int workers)
    : command_(std::move(command)),
      config_path_(std::move(config_path)),
      worker_count_(std::max(1, workers)) {
  if (command_.empty()) throw ConfigError("external backend needs a worker command");
  ::signal(SIGPIPE, SIG_IGN);
}

ExternalEvaluator::~ExternalEvaluator() = default;

void ExternalEvaluator::start() {
  std::string full = command_;
  if (!config_path_.empty()) full += " '" + config_path_ + "'";
  for (int w = 0; w < worker_count_; ++w) {
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0) {
      throw EvaluatorError(std::string("pipe failed: ") + std::strerror(errno));
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
      throw EvaluatorError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", full.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    auto worker = std::make_unique<Worker>();
    worker->pid = pid;
    worker->to_child = in_pipe[1];
    worker->from_child = out_pipe[0];
    workers_.push_back(std::move(worker));
  }
}

std::vector<EvalResponse> ExternalEvaluator::run_batch(
    std::span<const EvalRequest> requests) {
  if (workers_.empty()) start();
  std::vector<std::optional<EvalResponse>> results(requests.size());
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < requests.size(); ++i) queue.push_back(i);
  std::size_t done = 0;
  char buffer[1 << 16];

  while (done < requests.size()) {
    for (auto& worker : workers_) {
      if (worker->pending || queue.empty()) continue;
      worker->pending = queue.front();
      queue.pop_front();
      write_all(worker->to_child, protocol_encode(requests[*worker->pending]));
    }
    std::vector<pollfd> fds;
    std::vector<Worker*> busy;
    for (auto& worker : workers_) {
      if (!worker->pending) continue;
      fds.push_back({worker->from_child, POLLIN, 0});
      busy.push_back(worker.get());
    }
    if (::poll(fds.data(), fds.size(), -1) < 0) {
      if (errno == EINTR) continue;
      throw EvaluatorError(std::string("poll failed: ") + std::strerror(errno));
    }
    for (std::size_t k = 0; k < fds.size(); ++k) {
      if (fds[k].revents == 0) continue;
      Worker& worker = *busy[k];
      const ssize_t n = ::read(worker.from_child, buffer, sizeof(buffer));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        throw EvaluatorError("worker exited before answering request " +
                             std::to_string(requests[*worker.pending].id));
      }
      worker.reader.feed(std::string_view(buffer, static_cast<std::size_t>(n)));
      try {
        while (auto message = worker.reader.next()) {
          auto* resp = std::get_if<EvalResponse>(&*message);
          if (!resp || !worker.pending ||
              resp->id != requests[*worker.pending].id) {
            throw EvaluatorError("unexpected message from worker");
          }
          if (!resp->error && !resp->fitness) {
            throw EvaluatorError("worker response without fitness");
          }
          results[*worker.pending] = std::move(*resp);
          worker.pending.reset();
          ++done;
        }
      } catch (const ProtocolError& e) {
        throw EvaluatorError(std::string("malformed worker response: ") +
                             e.what());
      }
    }
  }
  std::vector<EvalResponse> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

}  // namespace tsenas
