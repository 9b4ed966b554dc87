// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include "simorch/client.hpp"

#include <array>
#include <cstdlib>
#include <thread>

#include "net.hpp"
#include "simorch/bytes.hpp"
#include "simorch/error.hpp"

namespace simorch {

namespace {

class TcpTransport final : public Transport {
 public:
  explicit TcpTransport(const std::string& address) {
    auto [host, port] = net::parse_address(address);
    fd_ = net::connect_tcp(host, port);
  }

  std::vector<std::uint8_t> roundtrip(std::span<const std::uint8_t> payload) override {
    net::write_frame(fd_.get(), payload);
    std::vector<std::uint8_t> response;
    auto status = net::read_frame(fd_.get(), 0xFFFFFFFFu, response);
    if (status != net::FrameStatus::kOk) {
      throw Error(ErrorCode::kTransport, "connection closed by store");
    }
    return response;
  }

 private:
  net::Fd fd_;
};

class LocalTransport final : public Transport {
 public:
  explicit LocalTransport(Store& store) : store_(store) {}

  std::vector<std::uint8_t> roundtrip(std::span<const std::uint8_t> payload) override {
    bool shutdown = false;
    return wire::handle_request(store_, payload, shutdown);
  }

 private:
  Store& store_;
};

ErrorCode code_from_reason(const std::string& reason, std::string& message) {
  auto colon = reason.find(": ");
  if (colon != std::string::npos) {
    auto name = reason.substr(0, colon);
    for (int c = 0; c <= static_cast<int>(ErrorCode::kWorkflow); ++c) {
      auto code = static_cast<ErrorCode>(c);
      if (to_string(code) == name) {
        message = reason.substr(colon + 2);
        return code;
      }
    }
  }
  message = reason;
  return ErrorCode::kMalformed;
}

std::uint64_t read_u64(const wire::Response& r) {
  ByteReader reader(r.body);
  return reader.u64("u64 response");
}

bool read_flag(const wire::Response& r) {
  ByteReader reader(r.body);
  return reader.u8("flag response") != 0;
}

}  // namespace

std::unique_ptr<Transport> make_tcp_transport(const std::string& address) {
  return std::make_unique<TcpTransport>(address);
}

std::unique_ptr<Transport> make_local_transport(Store& store) {
  return std::make_unique<LocalTransport>(store);
}

Client::Client(std::unique_ptr<Transport> transport) : transport_(std::move(transport)) {}

Client Client::connect(const std::string& address) {
  return Client(make_tcp_transport(address));
}

Client Client::from_env() {
  const char* addr = std::getenv(kStoreAddrEnv);
  if (addr == nullptr || *addr == '\0') {
    throw Error(ErrorCode::kInvalidConfig, std::string(kStoreAddrEnv) + " is not set");
  }
  return connect(addr);
}

Client Client::in_process(Store& store) { return Client(make_local_transport(store)); }

void Client::set_data_source(const std::string& member) {
  prefix_ = member.empty() ? std::string() : member + ".";
}

std::string Client::scoped(const std::string& key) const { return prefix_ + key; }

wire::Response Client::raw(const wire::Request& req) {
  ++requests_;
  auto payload = wire::encode_request(req);
  return wire::decode_response(transport_->roundtrip(payload));
}

wire::Response Client::call(const wire::Request& req) {
  auto resp = raw(req);
  if (resp.status == wire::Status::kError) {
    std::string reason(resp.body.begin(), resp.body.end()), message;
    auto code = code_from_reason(reason, message);
    throw Error(code, message);
  }
  return resp;
}

void Client::ping() {
  wire::Request req;
  req.code = wire::Command::kPing;
  call(req);
}

void Client::shutdown_server() {
  wire::Request req;
  req.code = wire::Command::kShutdown;
  call(req);
}

void Client::put_tensor(const std::string& key, const Tensor& t) {
  wire::Request req;
  req.code = wire::Command::kPutTensor;
  req.key = scoped(key);
  req.tensor = t;
  call(req);
}

std::optional<Tensor> Client::get_tensor(const std::string& key) {
  wire::Request req;
  req.code = wire::Command::kGetTensor;
  req.key = scoped(key);
  auto resp = call(req);
  if (resp.status == wire::Status::kNotFound) return std::nullopt;
  ByteReader r(resp.body);
  return wire::decode_tensor(r);
}

void Client::delete_key(Kind kind, const std::string& key) {
  wire::Request req;
  req.code = wire::Command::kDelete;
  req.kind = kind;
  req.key = scoped(key);
  call(req);
}

bool Client::exists(Kind kind, const std::string& key) {
  wire::Request req;
  req.code = wire::Command::kExists;
  req.kind = kind;
  req.key = scoped(key);
  return read_flag(call(req));
}

void Client::put_dataset(const Dataset& d) {
  wire::Request req;
  req.code = wire::Command::kPutDataset;
  req.dataset = d;
  req.dataset.name = scoped(d.name);
  call(req);
}

std::optional<Dataset> Client::get_dataset(const std::string& name) {
  wire::Request req;
  req.code = wire::Command::kGetDataset;
  req.key = scoped(name);
  auto resp = call(req);
  if (resp.status == wire::Status::kNotFound) return std::nullopt;
  ByteReader r(resp.body);
  auto d = wire::decode_dataset(r);
  d.name = name;
  return d;
}

std::size_t Client::list_append(const std::string& list_key, const std::string& dataset_key) {
  wire::Request req;
  req.code = wire::Command::kListAppend;
  req.key = scoped(list_key);
  req.key2 = scoped(dataset_key);
  return read_u64(call(req));
}

std::optional<std::size_t> Client::list_length(const std::string& list_key) {
  wire::Request req;
  req.code = wire::Command::kListLength;
  req.key = scoped(list_key);
  auto resp = call(req);
  if (resp.status == wire::Status::kNotFound) return std::nullopt;
  return read_u64(resp);
}

std::optional<std::vector<std::string>> Client::list_get(const std::string& list_key) {
  wire::Request req;
  req.code = wire::Command::kListGet;
  req.key = scoped(list_key);
  auto resp = call(req);
  if (resp.status == wire::Status::kNotFound) return std::nullopt;
  ByteReader r(resp.body);
  auto n = r.u32("list count");
  std::vector<std::string> entries;
  entries.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    auto e = r.str("list entry");
    if (!prefix_.empty() && e.starts_with(prefix_)) e.erase(0, prefix_.size());
    entries.push_back(std::move(e));
  }
  return entries;
}

void Client::put_model(const std::string& key, const mlp::MlpModel& model) {
  auto bytes = mlp::serialize(model);
  put_model_bytes(key, bytes);
}

void Client::put_model_bytes(const std::string& key, std::span<const std::uint8_t> bytes) {
  wire::Request req;
  req.code = wire::Command::kPutModel;
  req.key = scoped(key);
  req.model.assign(bytes.begin(), bytes.end());
  call(req);
}

bool Client::model_exists(const std::string& key) {
  wire::Request req;
  req.code = wire::Command::kModelExists;
  req.key = scoped(key);
  return read_flag(call(req));
}

bool Client::run_model(const std::string& model_key, const std::vector<std::string>& inputs,
                       const std::vector<std::string>& outputs) {
  wire::Request req;
  req.code = wire::Command::kRunModel;
  req.key = scoped(model_key);
  for (const auto& k : inputs) req.inputs.push_back(scoped(k));
  for (const auto& k : outputs) req.outputs.push_back(scoped(k));
  return call(req).status == wire::Status::kOk;
}

std::pair<std::string, std::string> split_field_key(const std::string& full_key) {
  auto close = full_key.find("}.");
  if (full_key.size() < 4 || full_key.front() != '{' || close == std::string::npos ||
      close == 1 || close + 2 == full_key.size()) {
    throw Error(ErrorCode::kInvalidName, "not a {dataset}.field key: '" + full_key + "'");
  }
  return {full_key.substr(1, close - 1), full_key.substr(close + 2)};
}

std::optional<Tensor> Client::get_field(const std::string& full_key) {
  auto [dataset, field] = split_field_key(full_key);
  auto d = get_dataset(dataset);
  if (!d) return std::nullopt;
  auto it = d->tensors.find(field);
  if (it == d->tensors.end()) return std::nullopt;
  return it->second;
}

PollResult Client::poll_key(Kind kind, const std::string& key, const PollSpec& spec) {
  if (spec.max_attempts < 1 || spec.interval.count() < 1) {
    throw Error(ErrorCode::kInvalidConfig, "poll interval must be >= 1 ms and attempts >= 1");
  }
  PollResult result;
  for (int attempt = 1; attempt <= spec.max_attempts; ++attempt) {
    result.attempts = attempt;
    if (exists(kind, key)) {
      result.found = true;
      return result;
    }
    if (attempt < spec.max_attempts) std::this_thread::sleep_for(spec.interval);
  }
  return result;
}

PollResult Client::poll_list_length(const std::string& list_key, std::size_t expected,
                                    const PollSpec& spec) {
  if (expected < 1) throw Error(ErrorCode::kInvalidConfig, "expected length must be >= 1");
  if (spec.max_attempts < 1 || spec.interval.count() < 1) {
    throw Error(ErrorCode::kInvalidConfig, "poll interval must be >= 1 ms and attempts >= 1");
  }
  PollResult result;
  for (int attempt = 1; attempt <= spec.max_attempts; ++attempt) {
    result.attempts = attempt;
    auto n = list_length(list_key);
    if (n && *n == expected) {
      result.found = true;
      return result;
    }
    if (n && *n > expected) {
      throw Error(ErrorCode::kOvershoot, "list '" + list_key + "' has " + std::to_string(*n) +
                                             " entries, expected " + std::to_string(expected));
    }
    if (attempt < spec.max_attempts) std::this_thread::sleep_for(spec.interval);
  }
  return result;
}

}  // namespace simorch
