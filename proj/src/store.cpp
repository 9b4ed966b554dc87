// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include "simorch/store.hpp"

#include "simorch/error.hpp"

namespace simorch {

const char* to_string(Kind kind) {
  switch (kind) {
    case Kind::kTensor: return "tensor";
    case Kind::kDataset: return "dataset";
    case Kind::kList: return "list";
    case Kind::kModel: return "model";
  }
  return "unknown";
}

void Store::emit(StoreEvent::Op op, Kind kind, const std::string& key,
                 std::size_t detail) const {
  std::lock_guard lock(observer_mu_);
  if (observer_) observer_(StoreEvent{op, kind, key, detail});
}

void Store::set_observer(Observer observer) {
  std::lock_guard lock(observer_mu_);
  observer_ = std::move(observer);
}

void Store::record_rejection(ErrorCode code) {
  if (code == ErrorCode::kZeroSized) ++zero_sized_;
  if (code == ErrorCode::kMalformed) ++malformed_;
}

StoreStats Store::stats() const {
  return StoreStats{zero_sized_.load(), malformed_.load(), model_runs_.load()};
}

void Store::put_tensor(const std::string& key, Tensor t) {
  try {
    validate_shape(t.dims(), t.size());
  } catch (const Error& e) {
    (e.code() == ErrorCode::kZeroSized ? zero_sized_ : malformed_)++;
    throw;
  }
  std::unique_lock lock(tensor_mu_);
  auto n = t.size();
  tensors_.insert_or_assign(key, std::move(t));
  emit(StoreEvent::Op::kPut, Kind::kTensor, key, n);
}

std::optional<Tensor> Store::get_tensor(const std::string& key) const {
  std::shared_lock lock(tensor_mu_);
  auto it = tensors_.find(key);
  if (it == tensors_.end()) return std::nullopt;
  return it->second;
}

void Store::put_dataset(Dataset d) {
  for (const auto& [field, t] : d.tensors) {
    try {
      validate_shape(t.dims(), t.size());
    } catch (const Error& e) {
      (e.code() == ErrorCode::kZeroSized ? zero_sized_ : malformed_)++;
      throw Error(e.code(), "dataset '" + d.name + "' field '" + field + "': " + e.message());
    }
  }
  std::unique_lock lock(dataset_mu_);
  auto key = d.name;
  auto n = d.tensors.size();
  datasets_.insert_or_assign(key, std::move(d));
  emit(StoreEvent::Op::kPut, Kind::kDataset, key, n);
}

std::optional<Dataset> Store::get_dataset(const std::string& key) const {
  std::shared_lock lock(dataset_mu_);
  auto it = datasets_.find(key);
  if (it == datasets_.end()) return std::nullopt;
  return it->second;
}

std::size_t Store::list_append(const std::string& list_key,
                               const std::string& dataset_key) {
  std::shared_lock ds_lock(dataset_mu_);
  if (!datasets_.contains(dataset_key)) {
    throw Error(ErrorCode::kDangling, "dataset '" + dataset_key + "' does not exist");
  }
  std::unique_lock lock(list_mu_);
  auto& entries = lists_[list_key];
  entries.push_back(dataset_key);
  emit(StoreEvent::Op::kAppend, Kind::kList, list_key, entries.size());
  return entries.size();
}

std::optional<std::size_t> Store::list_length(const std::string& list_key) const {
  std::shared_lock lock(list_mu_);
  auto it = lists_.find(list_key);
  if (it == lists_.end()) return std::nullopt;
  return it->second.size();
}

std::optional<std::vector<std::string>> Store::list_get(
    const std::string& list_key) const {
  std::shared_lock lock(list_mu_);
  auto it = lists_.find(list_key);
  if (it == lists_.end()) return std::nullopt;
  return it->second;
}

void Store::put_model(const std::string& key, mlp::MlpModel model) {
  mlp::validate(model);
  auto ptr = std::make_shared<const mlp::MlpModel>(std::move(model));
  std::unique_lock lock(model_mu_);
  auto n = ptr->parameter_count();
  models_.insert_or_assign(key, std::move(ptr));
  emit(StoreEvent::Op::kPut, Kind::kModel, key, n);
}

bool Store::model_exists(const std::string& key) const {
  std::shared_lock lock(model_mu_);
  return models_.contains(key);
}

void Store::run_model(const std::string& model_key,
                      std::span<const std::string> input_keys,
                      std::span<const std::string> output_keys) {
  if (input_keys.size() != output_keys.size() || input_keys.empty()) {
    throw Error(ErrorCode::kShapeMismatch,
                "run_model needs matching, non-empty input and output key lists");
  }
  std::vector<Tensor> inputs;
  inputs.reserve(input_keys.size());
  {
    std::shared_lock lock(tensor_mu_);
    for (const auto& k : input_keys) {
      auto it = tensors_.find(k);
      if (it == tensors_.end()) {
        throw Error(ErrorCode::kNotFound, "input tensor '" + k + "' not found");
      }
      inputs.push_back(it->second);
    }
  }
  std::shared_ptr<const mlp::MlpModel> model;
  {
    std::shared_lock lock(model_mu_);
    auto it = models_.find(model_key);
    if (it == models_.end()) {
      throw Error(ErrorCode::kNotFound, "model '" + model_key + "' not found");
    }
    model = it->second;
  }
  std::vector<Tensor> outputs;
  outputs.reserve(inputs.size());
  for (const auto& in : inputs) {
    if (in.size() % model->input_width() != 0) {
      throw Error(ErrorCode::kShapeMismatch,
                  "input of " + std::to_string(in.size()) +
                      " values is not a multiple of model input width " +
                      std::to_string(model->input_width()));
    }
    outputs.push_back(mlp::forward(*model, in));
  }
  std::unique_lock lock(tensor_mu_);
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    auto n = outputs[i].size();
    tensors_.insert_or_assign(output_keys[i], std::move(outputs[i]));
    emit(StoreEvent::Op::kPut, Kind::kTensor, output_keys[i], n);
  }
  ++model_runs_;
}

void Store::delete_key(Kind kind, const std::string& key) {
  std::size_t erased = 0;
  switch (kind) {
    case Kind::kTensor: {
      std::unique_lock lock(tensor_mu_);
      erased = tensors_.erase(key);
      if (erased) emit(StoreEvent::Op::kDelete, kind, key, 0);
      break;
    }
    case Kind::kDataset: {
      std::unique_lock lock(dataset_mu_);
      erased = datasets_.erase(key);
      if (erased) emit(StoreEvent::Op::kDelete, kind, key, 0);
      break;
    }
    case Kind::kList: {
      std::unique_lock lock(list_mu_);
      erased = lists_.erase(key);
      if (erased) emit(StoreEvent::Op::kDelete, kind, key, 0);
      break;
    }
    case Kind::kModel: {
      std::unique_lock lock(model_mu_);
      erased = models_.erase(key);
      if (erased) emit(StoreEvent::Op::kDelete, kind, key, 0);
      break;
    }
  }
}

bool Store::exists(Kind kind, const std::string& key) const {
  switch (kind) {
    case Kind::kTensor: {
      std::shared_lock lock(tensor_mu_);
      return tensors_.contains(key);
    }
    case Kind::kDataset: {
      std::shared_lock lock(dataset_mu_);
      return datasets_.contains(key);
    }
    case Kind::kList: {
      std::shared_lock lock(list_mu_);
      return lists_.contains(key);
    }
    case Kind::kModel: return model_exists(key);
  }
  return false;
}

std::uint64_t topology_connections(bool hub,
                                   std::span<const std::uint64_t> client_counts) {
  if (!hub) {
    throw Error(ErrorCode::kInvalidConfig,
                "only hub-and-spoke connection counting is supported");
  }
  if (client_counts.empty()) return 0;
  const auto hub_size = client_counts.back();
  std::uint64_t total = 0;
  for (std::size_t i = 0; i + 1 < client_counts.size(); ++i) {
    total += client_counts[i] * hub_size;
  }
  return total;
}

}  // namespace simorch
