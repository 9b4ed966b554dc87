// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_WORKERS_HPP_
#define SIMORCH_WORKERS_HPP_

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace simorch {

/// A set of indexed workers started by a workflow driver. Implementations
/// run them as threads (tests) or as OS processes (experiment driver).
class WorkerGroup {
 public:
  virtual ~WorkerGroup() = default;
  /// Starts worker `index` without blocking.
  virtual void start(std::size_t index) = 0;
  /// Waits for every started worker. Returns one message per failed worker.
  virtual std::vector<std::string> join() = 0;
};

/// Runs each worker body on its own thread. Exceptions become failures.
class ThreadWorkerGroup : public WorkerGroup {
 public:
  explicit ThreadWorkerGroup(std::function<void(std::size_t)> body) : body_(std::move(body)) {}
  ~ThreadWorkerGroup() override { join(); }

  void start(std::size_t index) override {
    failures_.emplace_back();
    auto* slot = &failures_.back();
    threads_.emplace_back([this, index, slot] {
      try {
        body_(index);
      } catch (const std::exception& e) {
        *slot = "worker " + std::to_string(index) + ": " + e.what();
      }
    });
  }

  std::vector<std::string> join() override {
    for (auto& t : threads_)
      if (t.joinable()) t.join();
    threads_.clear();
    std::vector<std::string> out;
    for (auto& f : failures_)
      if (!f.empty()) out.push_back(f);
    failures_.clear();
    return out;
  }

 private:
  std::function<void(std::size_t)> body_;
  std::vector<std::thread> threads_;
  std::deque<std::string> failures_;  // stable addresses for the threads
};

}  // namespace simorch

#endif  // SIMORCH_WORKERS_HPP_
