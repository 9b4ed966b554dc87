// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include "simorch/experiment.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "simorch/client.hpp"
#include "simorch/error.hpp"
#include "simorch/naming.hpp"

extern char** environ;

namespace simorch::experiment {

namespace {

const char* state_name(State s) {
  switch (s) {
    case State::kPending: return "pending";
    case State::kRunning: return "running";
    case State::kCompleted: return "completed";
    case State::kFailed: return "failed";
  }
  return "?";
}

Entity render_entity(const Entity& tmpl, const std::map<std::string, std::string>& bindings) {
  Entity e = tmpl;
  for (auto& a : e.args) a = render(a, bindings);
  for (auto& [k, v] : e.env) v = render(v, bindings);
  return e;
}

}  // namespace

std::string Status::describe() const {
  std::string s = state_name(state);
  if (terminal()) s += "(" + std::to_string(exit_code) + ")";
  if (!detail.empty()) s += ": " + detail;
  return s;
}

Experiment::Experiment(std::string name, std::filesystem::path dir, std::string store_address)
    : name_(std::move(name)), dir_(std::move(dir)), store_address_(std::move(store_address)) {
  std::filesystem::create_directories(dir_);
}

Experiment::~Experiment() {
  try {
    teardown();
  } catch (...) {
  }
}

Experiment::Slot& Experiment::slot(Handle h) {
  if (h >= slots_.size()) throw Error(ErrorCode::kNotFound, "no entity handle " + std::to_string(h));
  return slots_[h];
}

Handle Experiment::add(Entity entity) {
  if (entity.name.empty()) throw Error(ErrorCode::kInvalidConfig, "entity needs a name");
  for (const auto& s : slots_)
    if (s.entity.name == entity.name)
      throw Error(ErrorCode::kInvalidConfig, "duplicate entity name '" + entity.name + "'");
  slots_.push_back({std::move(entity), {}, -1});
  return slots_.size() - 1;
}

std::filesystem::path Experiment::stdout_path(Handle h) const {
  return dir_ / (slots_.at(h).entity.name + ".out");
}

std::filesystem::path Experiment::stderr_path(Handle h) const {
  return dir_ / (slots_.at(h).entity.name + ".err");
}

std::string Experiment::stderr_tail(Handle h, std::size_t bytes) const {
  std::ifstream in(stderr_path(h), std::ios::binary);
  if (!in) return {};
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return all.size() > bytes ? all.substr(all.size() - bytes) : all;
}

void Experiment::spawn(Slot& s) {
  const auto& e = s.entity;
  std::vector<std::string> argv_s{e.executable};
  argv_s.insert(argv_s.end(), e.args.begin(), e.args.end());
  std::vector<char*> argv;
  for (auto& a : argv_s) argv.push_back(a.data());
  argv.push_back(nullptr);

  std::map<std::string, std::string> env;
  for (char** p = environ; *p; ++p) {
    std::string kv(*p);
    auto eq = kv.find('=');
    if (eq != std::string::npos) env[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (!store_address_.empty()) env[kStoreAddrEnv] = store_address_;
  for (const auto& [k, v] : e.env) env[k] = v;
  std::vector<std::string> env_s;
  for (const auto& [k, v] : env) env_s.push_back(k + "=" + v);
  std::vector<char*> envp;
  for (auto& kv : env_s) envp.push_back(kv.data());
  envp.push_back(nullptr);

  const auto out = (dir_ / (e.name + ".out")).string();
  const auto err = (dir_ / (e.name + ".err")).string();
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, out.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, err.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (!e.working_dir.empty())
    posix_spawn_file_actions_addchdir_np(&actions, e.working_dir.c_str());

  pid_t pid = -1;
  const int rc = posix_spawnp(&pid, e.executable.c_str(), &actions, nullptr, argv.data(), envp.data());
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    s.status = {State::kFailed, 127, std::string("spawn failed: ") + std::strerror(rc)};
    throw Error(ErrorCode::kSpawnFailed,
                "cannot start '" + e.name + "' (" + e.executable + "): " + std::strerror(rc));
  }
  s.pid = pid;
  s.status = {State::kRunning, 0, ""};
}

void Experiment::settle(Slot& s, int wait_status) {
  if (WIFEXITED(wait_status)) {
    const int code = WEXITSTATUS(wait_status);
    s.status = {code == 0 ? State::kCompleted : State::kFailed, code, ""};
  } else if (WIFSIGNALED(wait_status)) {
    const int sig = WTERMSIG(wait_status);
    s.status = {State::kFailed, 128 + sig, std::string("killed by signal ") + strsignal(sig)};
  }
  s.pid = -1;
}

void Experiment::start(Handle h, bool blocking) {
  auto& s = slot(h);
  if (s.status.state != State::kPending)
    throw Error(ErrorCode::kInvalidConfig, "entity '" + s.entity.name + "' was already started");
  spawn(s);
  if (blocking) wait(h);
}

Handle Experiment::start(Entity entity, bool blocking) {
  const auto h = add(std::move(entity));
  start(h, blocking);
  return h;
}

Status Experiment::poll_status(Handle h) {
  auto& s = slot(h);
  if (s.status.state == State::kRunning && s.pid > 0) {
    int ws = 0;
    const pid_t r = ::waitpid(s.pid, &ws, WNOHANG);
    if (r == s.pid) settle(s, ws);
  }
  return s.status;
}

Status Experiment::wait(Handle h) {
  auto& s = slot(h);
  if (s.status.state == State::kRunning && s.pid > 0) {
    int ws = 0;
    pid_t r;
    do {
      r = ::waitpid(s.pid, &ws, 0);
    } while (r < 0 && errno == EINTR);
    if (r == s.pid) settle(s, ws);
  }
  return s.status;
}

void Experiment::wait_all() {
  for (Handle h = 0; h < slots_.size(); ++h) wait(h);
}

void Experiment::terminate(Handle h, std::chrono::milliseconds grace) {
  auto& s = slot(h);
  if (poll_status(h).state != State::kRunning) return;
  ::kill(s.pid, SIGTERM);
  const auto deadline = std::chrono::steady_clock::now() + grace;
  while (std::chrono::steady_clock::now() < deadline) {
    if (poll_status(h).terminal()) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ::kill(s.pid, SIGKILL);
  wait(h);
}

std::vector<Handle> Experiment::launch_ensemble(
    const Entity& tmpl, const std::vector<std::map<std::string, std::string>>& params,
    std::size_t cap) {
  if (params.empty()) throw Error(ErrorCode::kInvalidConfig, "ensemble needs at least one member");
  if (cap == 0) cap = std::max(1u, std::thread::hardware_concurrency());
  std::vector<Handle> handles;
  for (const auto& p : params) {
    auto bindings = p;
    if (!bindings.count("member")) bindings["member"] = std::to_string(slots_.size());
    auto e = render_entity(tmpl, bindings);
    e.name = tmpl.name + "_" + bindings["member"];
    handles.push_back(add(std::move(e)));
  }
  peak_running_ = 0;
  std::vector<Handle> members_running;
  for (auto h : handles) {
    // Wait for a free slot among this ensemble's members.
    for (;;) {
      std::erase_if(members_running, [&](Handle m) { return poll_status(m).terminal(); });
      if (members_running.size() < cap) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    try {
      start(h, false);
      members_running.push_back(h);
      peak_running_ = std::max(peak_running_, members_running.size());
    } catch (const Error&) {
      // Recorded as failed on the slot; the rest of the ensemble proceeds.
    }
  }
  return handles;
}

void Experiment::teardown() {
  for (Handle h = 0; h < slots_.size(); ++h) {
    if (slots_[h].status.state == State::kRunning) terminate(h, std::chrono::milliseconds(500));
  }
}

void Experiment::write_manifest() const {
  nlohmann::json entities = nlohmann::json::array();
  for (Handle h = 0; h < slots_.size(); ++h) {
    const auto& s = slots_[h];
    entities.push_back({
        {"name", s.entity.name},
        {"executable", s.entity.executable},
        {"args", s.entity.args},
        {"env", s.entity.env},
        {"working_dir", s.entity.working_dir.string()},
        {"stdout", stdout_path(h).string()},
        {"stderr", stderr_path(h).string()},
        {"status", state_name(s.status.state)},
        {"exit_code", s.status.exit_code},
        {"detail", s.status.detail},
    });
  }
  nlohmann::json doc = {{"name", name_}, {"store", store_address_}, {"entities", entities}};
  std::ofstream(dir_ / "experiment.json") << doc.dump(2) << "\n";
}

void ProcessWorkerGroup::start(std::size_t index) {
  handles_.push_back(experiment_.add(make_(index)));
  experiment_.start(handles_.back(), false);
}

std::vector<std::string> ProcessWorkerGroup::join() {
  std::vector<std::string> failures;
  for (auto h : handles_) {
    auto st = experiment_.wait(h);
    if (!st.succeeded()) {
      auto msg = experiment_.entity(h).name + " " + st.describe();
      auto tail = experiment_.stderr_tail(h, 400);
      if (!tail.empty()) msg += " [stderr: " + tail + "]";
      failures.push_back(msg);
    }
  }
  handles_.clear();
  return failures;
}

void ProcessEvaluator::launch(const std::vector<bo::Member>& batch) {
  std::vector<std::map<std::string, std::string>> params;
  for (const auto& m : batch) params.push_back({{"member", m.id}, {"params", join_values(m.params)}});
  auto hs = experiment_.launch_ensemble(tmpl_, params, cap_);
  handles_.insert(handles_.end(), hs.begin(), hs.end());
}

std::vector<std::string> ProcessEvaluator::wait() {
  std::vector<std::string> failures;
  for (auto h : handles_) {
    auto st = experiment_.wait(h);
    if (!st.succeeded()) failures.push_back(experiment_.entity(h).name + " " + st.describe());
  }
  handles_.clear();
  return failures;
}

std::string join_values(const std::vector<double>& values) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, values[i]);
    if (i) out += ',';
    out.append(buf, end);
  }
  return out;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    double v = 0.0;
    auto [end, ec] = std::from_chars(text.data() + pos, text.data() + comma, v);
    if (ec != std::errc() || end != text.data() + comma)
      throw Error(ErrorCode::kInvalidConfig, "not a number list: '" + text + "'");
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

std::filesystem::path self_executable() { return std::filesystem::read_symlink("/proc/self/exe"); }

}  // namespace simorch::experiment
