// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_TOOLS_CONFIG_HPP_
#define SIMORCH_TOOLS_CONFIG_HPP_

#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"
#include "simorch/bayesopt.hpp"
#include "simorch/meshmotion.hpp"
#include "simorch/psvd.hpp"

namespace simorch::cli {

using nlohmann::json;

enum class Workflow { kSvd, kBayesopt, kMeshmotion };

Workflow parse_workflow(const std::string& name);
std::string to_string(Workflow w);

/// Every accepted key with its default value; the type of each default is
/// the type the key must have.
json defaults(Workflow w);

/// Overlays `patch` onto `base`. Unknown keys and type mismatches throw
/// INVALID_CONFIG naming `origin`.
void merge_strict(json& base, const json& patch, const std::string& origin);

/// Reads a JSON object from `path` (strict: it may also carry a matching
/// "workflow" key).
json load_file(const std::filesystem::path& path, Workflow w);

/// Converts a flag's text to the JSON type of `like`.
json parse_flag_value(const std::string& key, const std::string& text, const json& like);

struct BoSettings {
  bo::BoConfig config;
  std::string mode;           // "synthetic" or "external"
  std::string objective_cmd;  // external mode only
  std::size_t concurrency = 0;
};

/// Typed views; each validates and throws INVALID_CONFIG.
psvd::SvdConfig svd_config(const json& c);
BoSettings bo_settings(const json& c);
meshmotion::MeshMotionConfig mesh_config(const json& c);

}  // namespace simorch::cli

#endif  // SIMORCH_TOOLS_CONFIG_HPP_
