// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include "config.hpp"

#include <charconv>
#include <fstream>

#include "simorch/error.hpp"

namespace simorch::cli {

namespace {

json common(const std::string& out, std::uint64_t seed) {
  return {{"seed", seed}, {"store", ""}, {"output_dir", out}};
}

bool same_kind(const json& like, const json& v) {
  if (like.is_number_integer()) return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  if (like.is_number()) return v.is_number();
  if (like.is_array()) {
    if (!v.is_array()) return false;
    if (like.empty()) return true;
    for (const auto& e : v)
      if (!same_kind(like.front(), e)) return false;
    return true;
  }
  return like.type() == v.type();
}

std::string kind_name(const json& like) {
  if (like.is_number_integer()) return "a non-negative integer";
  if (like.is_number()) return "a number";
  if (like.is_string()) return "a string";
  if (like.is_boolean()) return "a boolean";
  if (like.is_array()) return "a list of " + (like.empty() ? std::string("values") : kind_name(like.front()));
  return "an object";
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    auto comma = text.find(',', pos);
    out.push_back(text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::size_t u(const json& c, const char* key) { return c.at(key).get<std::size_t>(); }
double f(const json& c, const char* key) { return c.at(key).get<double>(); }

PollSpec poll_of(const json& c, const char* attempts_key = "poll_attempts") {
  PollSpec p{std::chrono::milliseconds(u(c, "poll_interval_ms")), static_cast<int>(u(c, attempts_key))};
  if (p.interval.count() < 1 || p.max_attempts < 1)
    throw Error(ErrorCode::kInvalidConfig, "poll interval and attempts must be ≥ 1");
  return p;
}

}  // namespace

Workflow parse_workflow(const std::string& name) {
  if (name == "svd") return Workflow::kSvd;
  if (name == "bayesopt") return Workflow::kBayesopt;
  if (name == "meshmotion") return Workflow::kMeshmotion;
  throw Error(ErrorCode::kInvalidConfig, "unknown workflow '" + name + "'");
}

std::string to_string(Workflow w) {
  switch (w) {
    case Workflow::kSvd: return "svd";
    case Workflow::kBayesopt: return "bayesopt";
    case Workflow::kMeshmotion: return "meshmotion";
  }
  return "?";
}

json defaults(Workflow w) {
  json c;
  switch (w) {
    case Workflow::kSvd: {
      const psvd::SvdConfig d;
      c = common("simorch-out/svd", d.snapshots.seed);
      c.update({{"n_points", d.snapshots.n_points},
                {"components", d.snapshots.components},
                {"n_snapshots", d.snapshots.n_snapshots},
                {"true_rank", d.snapshots.true_rank},
                {"omega", d.snapshots.omega},
                {"noise", d.snapshots.noise},
                {"fields", d.snapshots.fields},
                {"partitions", d.partitions},
                {"rank", d.rank},
                {"publisher", d.publisher},
                {"poll_interval_ms", 10},
                {"poll_attempts", 6000}});
      break;
    }
    case Workflow::kBayesopt: {
      const bo::BoConfig d;
      c = common("simorch-out/bayesopt", d.seed);
      c.update({{"iterations", d.iterations},
                {"batch", d.batch},
                {"mode", "synthetic"},
                {"objective_cmd", ""},
                {"concurrency", 0},
                {"random_samples", d.acquisition.random_samples},
                {"polish_steps", d.acquisition.polish_steps},
                {"initial_design", d.acquisition.initial_design},
                {"poll_interval_ms", 10},
                {"poll_attempts", 6000}});
      break;
    }
    case Workflow::kMeshmotion: {
      const meshmotion::MeshMotionConfig d;
      c = common("simorch-out/meshmotion", d.seed);
      c.update({{"n_r", d.n_r},
                {"n_theta", d.n_theta},
                {"r_in", d.r_in},
                {"r_out", d.r_out},
                {"ranks", d.ranks},
                {"decomposition", mesh::to_string(d.decomposition)},
                {"steps", d.steps},
                {"dt", d.dt},
                {"amplitude_deg", d.motion.amplitude_deg},
                {"period", d.motion.period},
                {"hidden", d.hidden},
                {"learning_rate", d.learning_rate},
                {"max_epochs", d.max_epochs},
                {"target_mse", d.target_mse},
                {"poll_interval_ms", 10},
                {"poll_attempts", 6000},
                {"bootstrap_attempts", 3000}});
      break;
    }
  }
  return c;
}

void merge_strict(json& base, const json& patch, const std::string& origin) {
  if (!patch.is_object()) throw Error(ErrorCode::kInvalidConfig, origin + ": expected a JSON object");
  for (const auto& [key, value] : patch.items()) {
    if (!base.contains(key)) throw Error(ErrorCode::kInvalidConfig, origin + ": unknown field '" + key + "'");
    if (!same_kind(base[key], value)) {
      throw Error(ErrorCode::kInvalidConfig,
                  origin + ": field '" + key + "' must be " + kind_name(base[key]));
    }
    // Keep float-typed fields float even when written as integers.
    base[key] = base[key].is_number_float() ? json(value.get<double>()) : value;
  }
}

json load_file(const std::filesystem::path& path, Workflow w) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot read config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, path.string() + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("workflow")) {
    if (!doc["workflow"].is_string() || doc["workflow"] != to_string(w)) {
      throw Error(ErrorCode::kInvalidConfig,
                  path.string() + ": config is for workflow " + doc["workflow"].dump());
    }
    doc.erase("workflow");
  }
  return doc;
}

json parse_flag_value(const std::string& key, const std::string& text, const json& like) {
  auto bad = [&] {
    return Error(ErrorCode::kInvalidConfig, "--" + key + ": '" + text + "' is not " + kind_name(like));
  };
  if (like.is_string()) return text;
  if (like.is_array()) {
    json arr = json::array();
    const json elem = like.empty() ? json("") : like.front();
    for (const auto& part : split(text)) arr.push_back(parse_flag_value(key, part, elem));
    return arr;
  }
  if (like.is_number_integer()) {
    std::uint64_t v = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || end != text.data() + text.size()) throw bad();
    return v;
  }
  if (like.is_number()) {
    double v = 0.0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || end != text.data() + text.size()) throw bad();
    return v;
  }
  if (like.is_boolean()) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw bad();
  }
  throw bad();
}

psvd::SvdConfig svd_config(const json& c) {
  psvd::SvdConfig s;
  s.snapshots.n_points = u(c, "n_points");
  s.snapshots.components = u(c, "components");
  s.snapshots.n_snapshots = u(c, "n_snapshots");
  s.snapshots.true_rank = u(c, "true_rank");
  s.snapshots.omega = f(c, "omega");
  s.snapshots.noise = f(c, "noise");
  s.snapshots.seed = c.at("seed").get<std::uint64_t>();
  s.snapshots.fields = c.at("fields").get<std::vector<std::string>>();
  s.partitions = u(c, "partitions");
  s.rank = u(c, "rank");
  s.publisher = c.at("publisher").get<std::string>();
  s.poll = poll_of(c);
  psvd::check_spec(s.snapshots);
  psvd::PartitionPlan::make(s.snapshots.state_length(), s.partitions);
  if (s.rank < 1 || s.rank > s.snapshots.n_snapshots)
    throw Error(ErrorCode::kInvalidConfig, "rank must be between 1 and n_snapshots");
  return s;
}

BoSettings bo_settings(const json& c) {
  BoSettings b;
  b.config.iterations = u(c, "iterations");
  b.config.batch = u(c, "batch");
  b.config.seed = c.at("seed").get<std::uint64_t>();
  b.config.poll = poll_of(c);
  b.config.acquisition.random_samples = u(c, "random_samples");
  b.config.acquisition.polish_steps = u(c, "polish_steps");
  b.config.acquisition.initial_design = u(c, "initial_design");
  b.mode = c.at("mode").get<std::string>();
  b.objective_cmd = c.at("objective_cmd").get<std::string>();
  b.concurrency = u(c, "concurrency");
  if (b.config.iterations < 1 || b.config.batch < 1)
    throw Error(ErrorCode::kInvalidConfig, "iterations and batch must be ≥ 1");
  if (b.config.acquisition.random_samples < 1)
    throw Error(ErrorCode::kInvalidConfig, "random_samples must be ≥ 1");
  if (b.mode != "synthetic" && b.mode != "external")
    throw Error(ErrorCode::kInvalidConfig, "mode must be 'synthetic' or 'external'");
  if (b.mode == "external" && b.objective_cmd.empty())
    throw Error(ErrorCode::kInvalidConfig, "external mode needs --objective-cmd");
  return b;
}

meshmotion::MeshMotionConfig mesh_config(const json& c) {
  meshmotion::MeshMotionConfig m;
  m.n_r = u(c, "n_r");
  m.n_theta = u(c, "n_theta");
  m.r_in = f(c, "r_in");
  m.r_out = f(c, "r_out");
  m.ranks = u(c, "ranks");
  m.decomposition = mesh::parse_decomposition(c.at("decomposition").get<std::string>());
  m.steps = u(c, "steps");
  m.dt = f(c, "dt");
  m.motion.amplitude_deg = f(c, "amplitude_deg");
  m.motion.period = f(c, "period");
  m.hidden = c.at("hidden").get<std::vector<std::size_t>>();
  m.seed = c.at("seed").get<std::uint64_t>();
  m.learning_rate = f(c, "learning_rate");
  m.max_epochs = u(c, "max_epochs");
  m.target_mse = f(c, "target_mse");
  m.poll = poll_of(c);
  m.bootstrap_poll = poll_of(c, "bootstrap_attempts");
  m.validate();
  return m;
}

}  // namespace simorch::cli
