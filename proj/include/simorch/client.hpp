// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_CLIENT_HPP_
#define SIMORCH_CLIENT_HPP_

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simorch/mlp.hpp"
#include "simorch/store.hpp"
#include "simorch/tensor.hpp"
#include "simorch/wire.hpp"

namespace simorch {

inline constexpr const char* kStoreAddrEnv = "SIMORCH_STORE_ADDR";

/// Carries one request payload to a store and returns the response payload.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::vector<std::uint8_t> roundtrip(std::span<const std::uint8_t> payload) = 0;
};

/// Talks to a StoreServer over TCP, one request in flight.
std::unique_ptr<Transport> make_tcp_transport(const std::string& address);
/// Executes requests directly against an in-process Store through the same
/// codec, for single-process runs and tests.
std::unique_ptr<Transport> make_local_transport(Store& store);

struct PollSpec {
  std::chrono::milliseconds interval{10};
  int max_attempts = 1000;
};

struct PollResult {
  bool found = false;
  int attempts = 0;  // existence queries issued
};

/// Single-session store client. Not thread-safe; use one per thread of
/// control. Failures raised by the store are rethrown with their original
/// error code; transport failures raise TRANSPORT.
class Client {
 public:
  explicit Client(std::unique_ptr<Transport> transport);

  /// Connects to "host:port".
  static Client connect(const std::string& address);
  /// Connects to the address in SIMORCH_STORE_ADDR.
  static Client from_env();
  static Client in_process(Store& store);

  /// Scopes every key to an ensemble member: "<member>.<key>". Empty clears.
  void set_data_source(const std::string& member);
  const std::string& data_source() const { return prefix_; }

  void ping();
  void shutdown_server();

  void put_tensor(const std::string& key, const Tensor& t);
  std::optional<Tensor> get_tensor(const std::string& key);
  void delete_key(Kind kind, const std::string& key);
  bool exists(Kind kind, const std::string& key);

  void put_dataset(const Dataset& d);
  std::optional<Dataset> get_dataset(const std::string& name);

  std::size_t list_append(const std::string& list_key, const std::string& dataset_key);
  std::optional<std::size_t> list_length(const std::string& list_key);
  std::optional<std::vector<std::string>> list_get(const std::string& list_key);

  void put_model(const std::string& key, const mlp::MlpModel& model);
  void put_model_bytes(const std::string& key, std::span<const std::uint8_t> bytes);
  bool model_exists(const std::string& key);
  /// Returns false (NOT_FOUND) when the model or an input is missing.
  bool run_model(const std::string& model_key, const std::vector<std::string>& inputs,
                 const std::vector<std::string>& outputs);

  /// Fetches one dataset tensor by its full "{dataset}.field" key.
  std::optional<Tensor> get_field(const std::string& full_key);

  /// Queries existence every `interval` until found or attempts run out.
  /// Never consumes the value.
  PollResult poll_key(Kind kind, const std::string& key, const PollSpec& spec);
  /// Found once the list length equals `expected`; a longer list throws
  /// OVERSHOOT.
  PollResult poll_list_length(const std::string& list_key, std::size_t expected,
                              const PollSpec& spec);

  /// Raw request round trip, for protocol tests.
  wire::Response raw(const wire::Request& req);

  std::uint64_t requests_sent() const { return requests_; }

 private:
  wire::Response call(const wire::Request& req);
  std::string scoped(const std::string& key) const;

  std::unique_ptr<Transport> transport_;
  std::string prefix_;
  std::uint64_t requests_ = 0;
};

/// Splits "{dataset}.field" into its parts; throws INVALID_NAME.
std::pair<std::string, std::string> split_field_key(const std::string& full_key);

}  // namespace simorch

#endif  // SIMORCH_CLIENT_HPP_
