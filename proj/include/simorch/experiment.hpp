// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_EXPERIMENT_HPP_
#define SIMORCH_EXPERIMENT_HPP_

#include <sys/types.h>

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "simorch/bayesopt.hpp"
#include "simorch/workers.hpp"

namespace simorch::experiment {

/// One launchable program. Arguments and environment values may contain
/// `{{ var }}` tokens, filled in by launch_ensemble.
struct Entity {
  std::string name;
  std::string executable;  // a path, or a bare name searched on PATH
  std::vector<std::string> args;
  std::map<std::string, std::string> env;
  std::filesystem::path working_dir;  // empty: inherit
};

enum class State { kPending, kRunning, kCompleted, kFailed };

struct Status {
  State state = State::kPending;
  int exit_code = 0;   // process exit code, or 128 + signal
  std::string detail;  // spawn error or signal description

  bool terminal() const { return state == State::kCompleted || state == State::kFailed; }
  bool succeeded() const { return state == State::kCompleted && exit_code == 0; }
  std::string describe() const;
};

using Handle = std::size_t;

/// Spawns and tracks OS processes. Every child is reaped by teardown(),
/// which the destructor also runs. Single-threaded.
class Experiment {
 public:
  /// `dir` receives per-entity <name>.out / <name>.err and experiment.json.
  /// A non-empty `store_address` is exported to every child as
  /// SIMORCH_STORE_ADDR.
  Experiment(std::string name, std::filesystem::path dir, std::string store_address = "");
  ~Experiment();
  Experiment(const Experiment&) = delete;
  Experiment& operator=(const Experiment&) = delete;

  /// Registers a pending entity. Throws INVALID_CONFIG on a duplicate name.
  Handle add(Entity entity);
  /// Spawns a pending entity. Blocking waits for it to exit. Throws
  /// SPAWN_FAILED (the entity is then marked failed).
  void start(Handle h, bool blocking);
  Handle start(Entity entity, bool blocking);

  /// Non-blocking snapshot. Terminal states never change afterwards.
  Status poll_status(Handle h);
  Status wait(Handle h);
  /// Waits for every running entity.
  void wait_all();
  /// SIGTERM, then SIGKILL after `grace`, then reap.
  void terminate(Handle h, std::chrono::milliseconds grace = std::chrono::milliseconds(2000));

  /// One entity per parameter set, named "<template>_<member>" with the
  /// set as bindings; `member` defaults to the experiment-wide entity
  /// count. At most `cap` run at once (0: hardware concurrency), so this
  /// blocks until the last member has been started. Spawn failures are
  /// recorded per member and the rest proceed.
  std::vector<Handle> launch_ensemble(const Entity& tmpl,
                                      const std::vector<std::map<std::string, std::string>>& params,
                                      std::size_t cap = 0);
  /// Peak number of simultaneously running children seen by the last
  /// launch_ensemble.
  std::size_t peak_running() const { return peak_running_; }

  /// Kills anything still running and reaps every child.
  void teardown();
  void write_manifest() const;

  const Entity& entity(Handle h) const { return slots_.at(h).entity; }
  std::size_t size() const { return slots_.size(); }
  const std::filesystem::path& dir() const { return dir_; }
  const std::string& store_address() const { return store_address_; }
  std::filesystem::path stdout_path(Handle h) const;
  std::filesystem::path stderr_path(Handle h) const;
  /// Last `bytes` of the entity's stderr file.
  std::string stderr_tail(Handle h, std::size_t bytes = 2000) const;

 private:
  struct Slot {
    Entity entity;
    Status status;
    pid_t pid = -1;
  };
  Slot& slot(Handle h);
  void spawn(Slot& s);
  void settle(Slot& s, int wait_status);

  std::string name_;
  std::filesystem::path dir_;
  std::string store_address_;
  std::vector<Slot> slots_;
  std::size_t peak_running_ = 0;
};

/// WorkerGroup whose workers are processes built by `make(index)`.
class ProcessWorkerGroup : public WorkerGroup {
 public:
  ProcessWorkerGroup(Experiment& experiment, std::function<Entity(std::size_t)> make)
      : experiment_(experiment), make_(std::move(make)) {}
  void start(std::size_t index) override;
  std::vector<std::string> join() override;

 private:
  Experiment& experiment_;
  std::function<Entity(std::size_t)> make_;
  std::vector<Handle> handles_;
};

/// Evaluates BO ensemble members as processes from one template. The
/// template sees {{ member }} and {{ params }} (comma-separated values).
class ProcessEvaluator : public bo::Evaluator {
 public:
  ProcessEvaluator(Experiment& experiment, Entity tmpl, std::size_t cap = 0)
      : experiment_(experiment), tmpl_(std::move(tmpl)), cap_(cap) {}
  void launch(const std::vector<bo::Member>& batch) override;
  std::vector<std::string> wait() override;

 private:
  Experiment& experiment_;
  Entity tmpl_;
  std::size_t cap_;
  std::vector<Handle> handles_;
};

/// Comma-separated shortest round-trip formatting of `values`.
std::string join_values(const std::vector<double>& values);
/// Inverse of join_values. Throws INVALID_CONFIG.
std::vector<double> parse_values(const std::string& text);

/// Absolute path of the running executable.
std::filesystem::path self_executable();

}  // namespace simorch::experiment

#endif  // SIMORCH_EXPERIMENT_HPP_
