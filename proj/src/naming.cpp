// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include "simorch/naming.hpp"

#include <cctype>

#include "simorch/error.hpp"

namespace simorch {

namespace {

bool is_identifier(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(' ');
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(' ');
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string render(const std::string& tmpl,
                   const std::map<std::string, std::string>& bindings) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    auto open = tmpl.find("{{", pos);
    if (open == std::string::npos) break;
    auto close = tmpl.find("}}", open + 2);
    if (close == std::string::npos) break;
    auto name = trim(tmpl.substr(open + 2, close - open - 2));
    if (!is_identifier(name)) {
      // Not a placeholder; copy the braces through literally.
      out.append(tmpl, pos, open + 2 - pos);
      pos = open + 2;
      continue;
    }
    auto it = bindings.find(name);
    if (it == bindings.end()) {
      throw Error(ErrorCode::kUnboundPlaceholder, "no binding for '" + name + "'");
    }
    out.append(tmpl, pos, open - pos);
    out += it->second;
    pos = close + 2;
  }
  out.append(tmpl, pos, std::string::npos);
  return out;
}

NamingConvention NamingConvention::defaults_for(const std::string& publisher) {
  return {publisher + "_time_index_{{ time_index }}_mpi_rank_{{ mpi_rank }}",
          "field_name_{{ name }}_patch_{{ patch }}"};
}

std::string NamingConvention::dataset_name(std::size_t time_index, std::size_t rank) const {
  return render(dataset_template,
                {{"time_index", std::to_string(time_index)}, {"mpi_rank", std::to_string(rank)}});
}

std::string NamingConvention::field_name(const std::string& field,
                                         const std::string& patch) const {
  return render(field_template, {{"name", field}, {"patch", patch}});
}

std::string NamingConvention::full_key(std::size_t time_index, std::size_t rank,
                                       const std::string& field,
                                       const std::string& patch) const {
  return "{" + dataset_name(time_index, rank) + "}." + field_name(field, patch);
}

std::optional<FieldBlock> FieldBlock::make(std::string field, std::string patch,
                                           std::vector<double> flat, std::size_t components) {
  if (components == 0) throw Error(ErrorCode::kShapeMismatch, "components must be >= 1");
  if (flat.empty()) return std::nullopt;
  if (flat.size() % components != 0) {
    throw Error(ErrorCode::kMalformed, "field '" + field + "' patch '" + patch +
                                           "' length not a multiple of components");
  }
  auto n = flat.size() / components;
  return FieldBlock{std::move(field), std::move(patch), Tensor({n, components}, std::move(flat))};
}

FieldPublisher::FieldPublisher(Client& client, std::string publisher_name,
                               std::optional<NamingConvention> naming)
    : client_(client), name_(std::move(publisher_name)) {
  if (name_.empty()) throw Error(ErrorCode::kInvalidName, "publisher name is empty");
  naming_ = naming ? *naming : NamingConvention::defaults_for(name_);
}

void FieldPublisher::publish_metadata() {
  Dataset meta;
  meta.name = metadata_key();
  meta.add_meta_string("dataset", naming_.dataset_template);
  meta.add_meta_string("field", naming_.field_template);
  client_.put_dataset(meta);
}

std::string FieldPublisher::send_fields(std::size_t time_index, std::size_t rank,
                                        const std::vector<FieldBlock>& blocks) {
  if (blocks.empty()) {
    throw Error(ErrorCode::kZeroSized, "no non-empty field blocks to send");
  }
  auto ds = naming_.dataset_name(time_index, rank);
  send_list(ds, pack_fields(blocks));
  return ds;
}

std::vector<std::pair<std::string, Tensor>> FieldPublisher::pack_fields(
    const std::vector<FieldBlock>& blocks) const {
  std::vector<std::pair<std::string, Tensor>> named;
  named.reserve(blocks.size());
  for (const auto& b : blocks) {
    named.emplace_back(naming_.field_name(b.field_name, b.patch_name), b.values);
  }
  return named;
}

void FieldPublisher::send_list(const std::string& dataset_name,
                               const std::vector<std::pair<std::string, Tensor>>& named) {
  Dataset d;
  d.name = dataset_name;
  for (const auto& [name, t] : named) {
    if (d.tensors.contains(name)) {
      throw Error(ErrorCode::kInvalidName, "duplicate field name '" + name + "'");
    }
    d.add_tensor(name, t);
  }
  client_.put_dataset(d);
}

FieldResolver FieldResolver::from_store(Client& client, const std::string& publisher,
                                        const PollSpec& spec) {
  auto key = publisher + "_metadata";
  if (!client.poll_key(Kind::kDataset, key, spec).found) {
    throw Error(ErrorCode::kTimeout, "metadata dataset '" + key + "' never appeared");
  }
  auto meta = client.get_dataset(key);
  if (!meta) throw Error(ErrorCode::kNotFound, "metadata dataset '" + key + "' vanished");
  return FieldResolver(
      NamingConvention{meta->meta_strings("dataset").at(0), meta->meta_strings("field").at(0)});
}

}  // namespace simorch
