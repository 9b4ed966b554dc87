// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_STORE_HPP_
#define SIMORCH_STORE_HPP_

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "simorch/error.hpp"
#include "simorch/mlp.hpp"
#include "simorch/tensor.hpp"

namespace simorch {

/// Key namespaces. A key in one namespace never satisfies a lookup in another.
enum class Kind : std::uint8_t { kTensor = 0, kDataset = 1, kList = 2, kModel = 3 };

const char* to_string(Kind kind);

/// Mutation record emitted to an optional observer, in per-key commit order.
struct StoreEvent {
  enum class Op { kPut, kDelete, kAppend };
  Op op;
  Kind kind;
  std::string key;
  std::size_t detail = 0;  // element count for tensors, new length for appends
};

struct StoreStats {
  std::uint64_t zero_sized_rejections = 0;
  std::uint64_t malformed_rejections = 0;
  std::uint64_t model_runs = 0;
};

/// The orchestrator's in-memory state. Each namespace sits behind its own
/// reader/writer lock, so every single-key operation is linearizable; locks
/// are always taken in namespace order (tensor, dataset, list, model).
class Store {
 public:
  using Observer = std::function<void(const StoreEvent&)>;

  void put_tensor(const std::string& key, Tensor t);
  std::optional<Tensor> get_tensor(const std::string& key) const;

  void put_dataset(Dataset d);
  std::optional<Dataset> get_dataset(const std::string& key) const;

  /// Appends `dataset_key` to the list, creating it if absent. Returns the
  /// post-append length. Throws DANGLING if the dataset does not exist.
  std::size_t list_append(const std::string& list_key,
                          const std::string& dataset_key);
  std::optional<std::size_t> list_length(const std::string& list_key) const;
  std::optional<std::vector<std::string>> list_get(
      const std::string& list_key) const;

  void put_model(const std::string& key, mlp::MlpModel model);
  bool model_exists(const std::string& key) const;

  /// Runs the stored model on each input tensor (viewed as [n, in_dim]) and
  /// publishes all outputs in one commit. Throws NOT_FOUND or SHAPE_MISMATCH.
  void run_model(const std::string& model_key,
                 std::span<const std::string> input_keys,
                 std::span<const std::string> output_keys);

  /// Idempotent: deleting a missing key succeeds.
  void delete_key(Kind kind, const std::string& key);
  bool exists(Kind kind, const std::string& key) const;

  /// Counts a tensor rejected before it reached the store (wire decode).
  void record_rejection(ErrorCode code);

  void set_observer(Observer observer);
  StoreStats stats() const;

 private:
  void emit(StoreEvent::Op op, Kind kind, const std::string& key,
            std::size_t detail) const;

  mutable std::shared_mutex tensor_mu_, dataset_mu_, list_mu_, model_mu_;
  std::map<std::string, Tensor> tensors_;
  std::map<std::string, Dataset> datasets_;
  std::map<std::string, std::vector<std::string>> lists_;
  std::map<std::string, std::shared_ptr<const mlp::MlpModel>> models_;

  mutable std::mutex observer_mu_;
  Observer observer_;

  std::atomic<std::uint64_t> zero_sized_{0};
  std::atomic<std::uint64_t> malformed_{0};
  std::atomic<std::uint64_t> model_runs_{0};
};

/// Connection count of a hub-and-spoke deployment: every rank of each
/// non-hub application talks to every hub shard. `client_counts.back()` is
/// the hub size. Only hub mode is supported.
std::uint64_t topology_connections(bool hub,
                                   std::span<const std::uint64_t> client_counts);

}  // namespace simorch

#endif  // SIMORCH_STORE_HPP_
