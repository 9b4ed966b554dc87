// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "config.hpp"
#include "simorch/client.hpp"
#include "simorch/error.hpp"
#include "simorch/experiment.hpp"
#include "simorch/server.hpp"

#ifndef SIMORCH_VERSION
#define SIMORCH_VERSION "0.1.0"
#endif

namespace fs = std::filesystem;
using namespace simorch;
using namespace simorch::cli;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string dashed(std::string key) {
  for (auto& c : key)
    if (c == '_') c = '-';
  return key;
}

/// Flags generated from a workflow's config keys.
struct WorkflowFlags {
  Workflow workflow;
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

void add_workflow_flags(CLI::App* sub, WorkflowFlags& flags) {
  sub->add_option("-c,--config", flags.config_path, "JSON config file; flags override its values");
  const json keys = defaults(flags.workflow);
  for (const auto& [key, value] : keys.items()) {
    std::string names = "--" + dashed(key);
    if (key == "output_dir") names = "-o,--out,--output-dir";
    std::string help = "default: " + value.dump();
    if (key == "store") help = "store address host:port (default: $SIMORCH_STORE_ADDR, else self-launched)";
    std::string type = value.is_number_integer() ? "UINT" : value.is_number() ? "FLOAT" : "TEXT";
    if (value.is_array()) type = "LIST";
    flags.options[key] = sub->add_option(names, flags.values[key], help)->type_name(type);
  }
}

json resolve_config(const WorkflowFlags& flags) {
  json c = defaults(flags.workflow);
  if (!flags.config_path.empty()) merge_strict(c, load_file(flags.config_path, flags.workflow), flags.config_path);
  json overrides = json::object();
  for (const auto& [key, opt] : flags.options)
    if (opt->count() > 0) overrides[key] = parse_flag_value(dashed(key), flags.values.at(key), c[key]);
  merge_strict(c, overrides, "command line");
  return c;
}

json load_resolved(const fs::path& path, Workflow w) {
  json c = defaults(w);
  merge_strict(c, load_file(path, w), path.string());
  return c;
}

/// A store process started by this driver when no address was given.
class OwnedStore {
 public:
  explicit OwnedStore(const fs::path& dir) : ex_("store", dir) {
    const auto port_file = dir / "store.port";
    fs::remove(port_file);
    handle_ = ex_.start(experiment::Entity{"store", experiment::self_executable().string(),
                                           {"store", "serve", "--port", "0", "--port-file",
                                            port_file.string()},
                                           {}, {}},
                        false);
    const auto deadline = Clock::now() + std::chrono::seconds(20);
    while (!fs::exists(port_file)) {
      if (ex_.poll_status(handle_).terminal() || Clock::now() > deadline) {
        throw Error(ErrorCode::kTransport, "store process did not come up: " + ex_.stderr_tail(handle_));
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    std::ifstream in(port_file);
    int port = 0;
    in >> port;
    address_ = "127.0.0.1:" + std::to_string(port);
  }

  void shutdown() {
    try {
      Client::connect(address_).shutdown_server();
    } catch (const Error&) {
    }
    ex_.wait(handle_);
  }

  const std::string& address() const { return address_; }

 private:
  experiment::Experiment ex_;
  experiment::Handle handle_ = 0;
  std::string address_;
};

void print_svd(const psvd::SvdReport& r) {
  std::cout << "svd: rank " << r.rank << ", relative reconstruction error " << r.relative_error
            << ", leading sigma";
  for (std::size_t i = 0; i < std::min<std::size_t>(r.sigma.size(), r.rank + 1); ++i) std::cout << " " << r.sigma[i];
  std::cout << "\n";
}

int run_workflow(const WorkflowFlags& flags, const std::vector<std::string>& argv) {
  json config;
  std::optional<psvd::SvdConfig> svd;
  std::optional<BoSettings> bo;
  std::optional<meshmotion::MeshMotionConfig> mm;
  try {
    config = resolve_config(flags);
    switch (flags.workflow) {
      case Workflow::kSvd: svd = svd_config(config); break;
      case Workflow::kBayesopt: bo = bo_settings(config); break;
      case Workflow::kMeshmotion: mm = mesh_config(config); break;
    }
  } catch (const Error& e) {
    std::cerr << "simorch: " << e.message() << "\n";
    return e.code() == ErrorCode::kInvalidConfig ? kExitUsage : kExitFailure;
  }

  const fs::path out = config["output_dir"].get<std::string>();
  const auto name = to_string(flags.workflow);
  const auto t0 = Clock::now();
  json manifest = {{"workflow", name},
                   {"version", SIMORCH_VERSION},
                   {"seed", config["seed"]},
                   {"config", config},
                   {"argv", argv},
                   {"started_at", utc_now()}};
  json timings = json::object();
  int status = kExitOk;
  std::optional<OwnedStore> owned;
  try {
    fs::create_directories(out);
    json stored = config;
    stored["workflow"] = name;
    const auto config_file = fs::absolute(out / "config.json");
    std::ofstream(config_file) << stored.dump(2) << "\n";

    std::string address = config["store"].get<std::string>();
    if (address.empty()) {
      if (const char* env = std::getenv(kStoreAddrEnv)) address = env;
    }
    if (address.empty()) {
      const auto ts = Clock::now();
      owned.emplace(out / "procs");
      address = owned->address();
      timings["store_startup"] = since(ts);
    }
    manifest["store"] = address;
    manifest["store_self_launched"] = owned.has_value();

    auto client = Client::connect(address);
    experiment::Experiment ex("simorch-" + name, out / "procs", address);
    const auto self = experiment::self_executable().string();
    const auto out_abs = fs::absolute(out).string();

    if (svd) {
      experiment::ProcessWorkerGroup group(ex, [&](std::size_t i) {
        return experiment::Entity{"svd_worker_" + std::to_string(i), self,
                                  {"worker", "svd-partition", "--config", config_file.string(),
                                   "--index", std::to_string(i)},
                                  {}, {}};
      });
      auto report = psvd::run_svd_workflow(client, *svd, group);
      report.write(out, svd->snapshots);
      for (const auto& [k, v] : report.timings) timings[k] = v;
      print_svd(report);
    } else if (bo) {
      experiment::Entity tmpl{"bo", self,
                              {"worker", "bo-blackbox", "--member", "{{ member }}", "--params",
                               "{{ params }}"},
                              {}, {}};
      if (bo->mode == "external") tmpl = {"bo", "/bin/sh", {"-c", bo->objective_cmd}, {}, {}};
      experiment::ProcessEvaluator evaluator(ex, tmpl, bo->concurrency);
      const auto tb = Clock::now();
      auto history = bo::run_bo(client, bo->config, evaluator);
      timings["optimization"] = since(tb);
      const auto space = bo::ParameterSpace::turbulence();
      history.write_csv(out / "bo_history.csv", space);
      history.write_summary(out / "bo_summary.json", space);
      std::cout << "bayesopt: " << history.evaluations.size() << " evaluations, best objective "
                << history.best_objective << "\n";
    } else {
      experiment::ProcessWorkerGroup group(ex, [&](std::size_t i) {
        return experiment::Entity{i == 0 ? "mm_trainer" : "mm_simulation", self,
                                  {"worker", i == 0 ? "mm-trainer" : "mm-simulation", "--config",
                                   config_file.string(), "--out", out_abs},
                                  {}, {}};
      });
      auto report = meshmotion::run_meshmotion(client, *mm, group, out);
      for (const auto& [k, v] : report.timings) timings[k] = v;
      std::cout << "meshmotion: peak step " << report.peak_step << ", rms interior error "
                << report.peak_rms_relative * 100.0 << "% of max boundary displacement, "
                << "max non-orthogonality " << report.peak_nonorth_ann << " deg (reference "
                << report.peak_nonorth_ref << " deg), inverted cells: "
                << (report.any_inverted ? "yes" : "no") << "\n";
    }
    ex.write_manifest();
    manifest["status"] = "ok";
  } catch (const std::exception& e) {
    std::cerr << "simorch: " << e.what() << "\n";
    manifest["status"] = "error";
    manifest["error"] = e.what();
    status = kExitFailure;
  }
  if (owned) owned->shutdown();
  timings["total"] = since(t0);
  manifest["timings_s"] = timings;
  try {
    fs::create_directories(out);
    std::ofstream(out / "manifest.json") << manifest.dump(2) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "simorch: cannot write manifest: " << e.what() << "\n";
    status = kExitFailure;
  }
  return status;
}

int report_dir(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) {
    std::cerr << "simorch: no manifest.json in " << dir << "\n";
    return kExitFailure;
  }
  const auto manifest = json::parse(in);
  const auto workflow = manifest.value("workflow", std::string("?"));
  std::cout << "workflow: " << workflow << "\n"
            << "version: " << manifest.value("version", std::string("?")) << "\n"
            << "status: " << manifest.value("status", std::string("?")) << "\n"
            << "seed: " << manifest["seed"].dump() << "\n";
  if (manifest.contains("timings_s"))
    for (const auto& [k, v] : manifest["timings_s"].items()) std::cout << "time." << k << ": " << v.dump() << " s\n";
  const std::map<std::string, std::string> summaries{
      {"svd", "summary.json"}, {"bayesopt", "bo_summary.json"}, {"meshmotion", "meshmotion_summary.json"}};
  if (auto it = summaries.find(workflow); it != summaries.end()) {
    std::ifstream s(dir / it->second);
    if (s) {
      const auto summary = json::parse(s);
      for (const auto& [k, v] : summary.items()) {
        if (v.is_array() && v.size() > 8) {
          std::cout << k << ": [" << v.size() << " values]\n";
        } else {
          std::cout << k << ": " << v.dump() << "\n";
        }
      }
    }
  }
  std::cout << "files:";
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path().filename().string());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) std::cout << " " << f;
  std::cout << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simorch: store-mediated simulation and machine-learning workflows"};
  app.set_version_flag("--version", SIMORCH_VERSION);
  app.require_subcommand(1);

  auto* store = app.add_subcommand("store", "Run or control a store server");
  store->require_subcommand(1);
  ServerOptions server_opts;
  std::string port_file;
  auto* serve = store->add_subcommand("serve", "Serve a store until a shutdown request");
  serve->add_option("--bind", server_opts.bind_address, "listen address")->capture_default_str();
  serve->add_option("--port", server_opts.port, "TCP port, 0 picks a free one")->capture_default_str();
  serve->add_option("--max-frame-bytes", server_opts.max_frame_bytes, "largest accepted frame")
      ->capture_default_str();
  serve->add_option("--port-file", port_file, "write the bound port here once listening");
  std::string control_addr;
  auto* shutdown = store->add_subcommand("shutdown", "Ask a running store to exit");
  auto* ping = store->add_subcommand("ping", "Check that a store answers");
  for (auto* s : {shutdown, ping}) s->add_option("--store", control_addr, "store address host:port");

  auto* run = app.add_subcommand("run", "Run a workflow");
  run->require_subcommand(1);
  std::vector<WorkflowFlags> flags{{Workflow::kSvd, {}, {}, {}},
                                   {Workflow::kBayesopt, {}, {}, {}},
                                   {Workflow::kMeshmotion, {}, {}, {}}};
  std::vector<CLI::App*> run_subs;
  const std::map<Workflow, std::string> blurbs{
      {Workflow::kSvd, "Streamed partitioned SVD of synthetic snapshots"},
      {Workflow::kBayesopt, "Batch Bayesian optimization of turbulence coefficients"},
      {Workflow::kMeshmotion, "Online-trained mesh motion on an annulus"}};
  for (auto& f : flags) {
    run_subs.push_back(run->add_subcommand(to_string(f.workflow), blurbs.at(f.workflow)));
    add_workflow_flags(run_subs.back(), f);
  }

  std::string report_path;
  auto* report = app.add_subcommand("report", "Summarize a run's output directory");
  report->add_option("dir", report_path, "output directory of a run")->required();

  // Entry points for child processes; not part of the user interface.
  auto* worker = app.add_subcommand("worker", "")->group("");
  worker->require_subcommand(1);
  std::string w_config, w_member, w_params, w_out;
  std::size_t w_index = 0;
  auto* w_svd = worker->add_subcommand("svd-partition");
  w_svd->add_option("--config", w_config)->required();
  w_svd->add_option("--index", w_index)->required();
  auto* w_bo = worker->add_subcommand("bo-blackbox");
  w_bo->add_option("--member", w_member)->required();
  w_bo->add_option("--params", w_params)->required();
  auto* w_train = worker->add_subcommand("mm-trainer");
  auto* w_sim = worker->add_subcommand("mm-simulation");
  for (auto* s : {w_train, w_sim}) {
    s->add_option("--config", w_config)->required();
    s->add_option("--out", w_out)->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "simorch: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (serve->parsed()) {
      Store s;
      return simorch::serve(s, server_opts, port_file);
    }
    if (shutdown->parsed() || ping->parsed()) {
      auto client = control_addr.empty() ? Client::from_env() : Client::connect(control_addr);
      if (ping->parsed()) {
        client.ping();
        std::cout << "ok\n";
      } else {
        client.shutdown_server();
      }
      return kExitOk;
    }
    for (std::size_t i = 0; i < run_subs.size(); ++i) {
      if (!run_subs[i]->parsed()) continue;
      std::vector<std::string> args(argv, argv + argc);
      return run_workflow(flags[i], args);
    }
    if (report->parsed()) return report_dir(report_path);

    if (w_svd->parsed()) {
      auto client = Client::from_env();
      psvd::run_partition_worker(client, svd_config(load_resolved(w_config, Workflow::kSvd)), w_index);
    } else if (w_bo->parsed()) {
      auto client = Client::from_env();
      bo::blackbox_simulation(client, experiment::parse_values(w_params), w_member);
    } else if (w_train->parsed()) {
      auto client = Client::from_env();
      const auto cfg = mesh_config(load_resolved(w_config, Workflow::kMeshmotion));
      meshmotion::run_trainer(client, cfg).write_csv(fs::path(w_out) / meshmotion::kTrainerCsv);
    } else if (w_sim->parsed()) {
      const auto cfg = mesh_config(load_resolved(w_config, Workflow::kMeshmotion));
      meshmotion::run_simulation([] { return Client::from_env(); }, cfg).write(w_out);
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "simorch: " << e.what() << "\n";
    return kExitFailure;
  }
}
