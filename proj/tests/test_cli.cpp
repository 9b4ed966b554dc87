// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "simorch/experiment.hpp"

using namespace simorch;
using namespace simorch::experiment;
namespace fs = std::filesystem;

namespace {

const std::string kBinary = SIMORCH_CLI_PATH;

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("simorch_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run_cli(Experiment& ex, const std::string& name, std::vector<std::string> args) {
  auto h = ex.start(Entity{name, kBinary, std::move(args), {}, {}}, true);
  auto read = [](const fs::path& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  return {ex.poll_status(h).exit_code, read(ex.stdout_path(h)), read(ex.stderr_path(h))};
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  auto dir = scratch("usage");
  Experiment ex("usage", dir);
  auto none = run_cli(ex, "none", {});
  CHECK(none.code == 2);
  CHECK(none.err.find("Usage") != std::string::npos);

  auto ranks = run_cli(ex, "ranks", {"run", "meshmotion", "--ranks", "0", "-o", (dir / "o").string()});
  CHECK(ranks.code == 2);
  CHECK(ranks.err.find("ranks must be ≥ 1") != std::string::npos);

  CHECK(run_cli(ex, "flag", {"run", "svd", "--no-such-flag", "1"}).code == 2);
  CHECK(run_cli(ex, "badnum", {"run", "svd", "--partitions", "four"}).code == 2);

  std::ofstream(dir / "unknown.json") << R"({"partitions": 2, "colour": "red"})";
  auto unknown = run_cli(ex, "unknown", {"run", "svd", "-c", (dir / "unknown.json").string()});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("unknown field 'colour'") != std::string::npos);

  std::ofstream(dir / "wrongtype.json") << R"({"partitions": -1})";
  CHECK(run_cli(ex, "wrongtype", {"run", "svd", "-c", (dir / "wrongtype.json").string()}).code == 2);

  std::ofstream(dir / "other.json") << R"({"workflow": "bayesopt"})";
  CHECK(run_cli(ex, "other", {"run", "svd", "-c", (dir / "other.json").string()}).code == 2);

  CHECK(run_cli(ex, "help", {"--help"}).code == 0);
  CHECK(run_cli(ex, "noreport", {"report", (dir / "missing").string()}).code == 1);
}

TEST_CASE("store served by one process, svd run from another") {
  auto dir = scratch("svd");
  Experiment ex("svd", dir);
  auto server = ex.start(Entity{"server", kBinary,
                                {"store", "serve", "--port", "0", "--port-file", (dir / "port").string()},
                                {}, {}},
                         false);
  for (int i = 0; i < 500 && !fs::exists(dir / "port"); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  REQUIRE(fs::exists(dir / "port"));
  int port = 0;
  std::ifstream(dir / "port") >> port;
  const auto addr = "127.0.0.1:" + std::to_string(port);

  // File values are overridden by flags.
  std::ofstream(dir / "svd.json") << R"({"workflow": "svd", "n_points": 256, "n_snapshots": 16,
                                        "partitions": 3, "seed": 4})";
  const auto out = dir / "out";
  auto r = run_cli(ex, "run", {"run", "svd", "-c", (dir / "svd.json").string(), "--partitions", "2",
                               "--store", addr, "-o", out.string()});
  INFO(r.err);
  CHECK(r.code == 0);
  for (const char* f : {"manifest.json", "config.json", "summary.json", "singular_values.csv", "modes.bin"})
    CHECK(fs::exists(out / f));
  std::ifstream m(out / "manifest.json");
  auto manifest = nlohmann::json::parse(m);
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["config"]["partitions"] == 2);
  CHECK(manifest["config"]["n_points"] == 256);
  CHECK(manifest["seed"] == 4);
  CHECK(manifest["store"] == addr);
  CHECK(manifest["store_self_launched"] == false);
  CHECK(manifest["version"].get<std::string>().rfind("0.1.0", 0) == 0);
  CHECK(manifest["timings_s"].contains("total"));

  auto rep = run_cli(ex, "report", {"report", out.string()});
  CHECK(rep.code == 0);
  CHECK(rep.out.find("workflow: svd") != std::string::npos);

  CHECK(run_cli(ex, "stop", {"store", "shutdown", "--store", addr}).code == 0);
  CHECK(ex.wait(server).succeeded());
}

TEST_CASE("bayesopt with an external objective command") {
  auto dir = scratch("bo");
  Experiment ex("bo", dir);
  // The external command is the built-in blackbox invoked through the shell.
  const auto cmd = kBinary + " worker bo-blackbox --member {{ member }} --params {{ params }}";
  auto r = run_cli(ex, "bo", {"run", "bayesopt", "--mode", "external", "--objective-cmd", cmd,
                              "--iterations", "2", "--batch", "3", "--seed", "5", "-o",
                              (dir / "out").string()});
  INFO(r.err);
  CHECK(r.code == 0);
  std::ifstream s(dir / "out" / "bo_summary.json");
  auto summary = nlohmann::json::parse(s);
  CHECK(summary["evaluations"] == 7);
  CHECK(run_cli(ex, "nocmd", {"run", "bayesopt", "--mode", "external"}).code == 2);
}

TEST_CASE("workflow failures exit with 1") {
  auto dir = scratch("fail");
  Experiment ex("fail", dir);
  auto r = run_cli(ex, "deadstore", {"run", "svd", "--store", "127.0.0.1:1", "-o", (dir / "out").string()});
  CHECK(r.code == 1);
  std::ifstream m(dir / "out" / "manifest.json");
  CHECK(nlohmann::json::parse(m)["status"] == "error");
}
