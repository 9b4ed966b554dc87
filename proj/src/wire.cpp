// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include "simorch/wire.hpp"

#include <exception>

#include "simorch/error.hpp"
#include "simorch/mlp.hpp"

namespace simorch::wire {

namespace {

constexpr std::uint8_t kMaxCommand = static_cast<std::uint8_t>(Command::kShutdown);

void write_strings(ByteWriter& w, const std::vector<std::string>& v) {
  if (v.size() > 0xFFFF) throw Error(ErrorCode::kMalformed, "too many strings");
  w.u16(static_cast<std::uint16_t>(v.size()));
  for (const auto& s : v) w.str(s);
}

std::vector<std::string> read_strings(ByteReader& r, const char* what) {
  auto n = r.u16(what);
  std::vector<std::string> v;
  v.reserve(n);
  for (std::uint16_t i = 0; i < n; ++i) v.push_back(r.str(what));
  return v;
}

Kind read_kind(ByteReader& r) {
  auto k = r.u8("kind");
  if (k > static_cast<std::uint8_t>(Kind::kModel)) {
    throw Error(ErrorCode::kMalformed, "bad key kind " + std::to_string(k));
  }
  return static_cast<Kind>(k);
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
  if (a.name != b.name || a.meta != b.meta || a.tensors.size() != b.tensors.size()) {
    return false;
  }
  for (const auto& [field, t] : a.tensors) {
    auto it = b.tensors.find(field);
    if (it == b.tensors.end() || !t.bit_equal(it->second)) return false;
  }
  return true;
}

Response ok(std::vector<std::uint8_t> body = {}) { return {Status::kOk, std::move(body)}; }
Response not_found() { return {Status::kNotFound, {}}; }
Response error(const std::string& reason) {
  return {Status::kError, std::vector<std::uint8_t>(reason.begin(), reason.end())};
}

Response execute(Store& store, const Request& req, bool& shutdown) {
  switch (req.code) {
    case Command::kPing:
      return ok();
    case Command::kPutTensor:
      store.put_tensor(req.key, req.tensor);
      return ok();
    case Command::kGetTensor: {
      auto t = store.get_tensor(req.key);
      if (!t) return not_found();
      ByteWriter w;
      encode_tensor(w, *t);
      return ok(w.take());
    }
    case Command::kDelete:
      store.delete_key(req.kind, req.key);
      return ok();
    case Command::kExists: {
      ByteWriter w;
      w.u8(store.exists(req.kind, req.key) ? 1 : 0);
      return ok(w.take());
    }
    case Command::kPutDataset:
      store.put_dataset(req.dataset);
      return ok();
    case Command::kGetDataset: {
      auto d = store.get_dataset(req.key);
      if (!d) return not_found();
      ByteWriter w;
      encode_dataset(w, *d);
      return ok(w.take());
    }
    case Command::kListAppend: {
      ByteWriter w;
      w.u64(store.list_append(req.key, req.key2));
      return ok(w.take());
    }
    case Command::kListLength: {
      auto n = store.list_length(req.key);
      if (!n) return not_found();
      ByteWriter w;
      w.u64(*n);
      return ok(w.take());
    }
    case Command::kListGet: {
      auto entries = store.list_get(req.key);
      if (!entries) return not_found();
      ByteWriter w;
      w.u32(static_cast<std::uint32_t>(entries->size()));
      for (const auto& e : *entries) w.str(e);
      return ok(w.take());
    }
    case Command::kPutModel:
      store.put_model(req.key, mlp::deserialize(req.model));
      return ok();
    case Command::kModelExists: {
      ByteWriter w;
      w.u8(store.model_exists(req.key) ? 1 : 0);
      return ok(w.take());
    }
    case Command::kRunModel:
      try {
        store.run_model(req.key, req.inputs, req.outputs);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kNotFound) {
          auto body = e.message();
          return {Status::kNotFound, std::vector<std::uint8_t>(body.begin(), body.end())};
        }
        throw;
      }
      return ok();
    case Command::kShutdown:
      shutdown = true;
      return ok();
  }
  return error("unknown command");
}

}  // namespace

bool Request::operator==(const Request& other) const {
  return code == other.code && kind == other.kind && key == other.key &&
         key2 == other.key2 &&
         (tensor.dims().empty() ? other.tensor.dims().empty()
                                : tensor.bit_equal(other.tensor)) &&
         datasets_equal(dataset, other.dataset) && model == other.model &&
         inputs == other.inputs && outputs == other.outputs;
}

void encode_tensor(ByteWriter& w, const Tensor& t) {
  if (t.dims().size() > 0xFF) throw Error(ErrorCode::kMalformed, "too many dims");
  w.u8(static_cast<std::uint8_t>(t.dtype()));
  w.u8(static_cast<std::uint8_t>(t.dims().size()));
  for (auto d : t.dims()) w.u64(d);
  w.f64s(t.data());
}

Tensor decode_tensor(ByteReader& r) {
  auto dtype = r.u8("tensor header");
  if (dtype != static_cast<std::uint8_t>(DType::kFloat64)) {
    throw Error(ErrorCode::kMalformed, "unsupported dtype " + std::to_string(dtype));
  }
  auto ndim = r.u8("tensor header");
  std::vector<std::size_t> dims(ndim);
  std::size_t count = 1;
  bool overflow = false;
  for (auto& d : dims) {
    auto v = r.u64("tensor dims");
    d = static_cast<std::size_t>(v);
    if (d != 0 && count > (SIZE_MAX / 8) / d) overflow = true;
    count *= d;
  }
  if (ndim == 0) throw Error(ErrorCode::kMalformed, "tensor has no dims");
  if (overflow || count > r.remaining() / 8) {
    throw Error(ErrorCode::kMalformed, "short tensor body");
  }
  std::vector<double> data(count);
  r.f64s(data, "tensor body");
  return Tensor(std::move(dims), std::move(data));
}

void encode_dataset(ByteWriter& w, const Dataset& d) {
  w.str(d.name);
  w.u16(static_cast<std::uint16_t>(d.tensors.size()));
  for (const auto& [field, t] : d.tensors) {
    w.str(field);
    encode_tensor(w, t);
  }
  w.u16(static_cast<std::uint16_t>(d.meta.size()));
  for (const auto& [key, values] : d.meta) {
    w.str(key);
    write_strings(w, values);
  }
}

Dataset decode_dataset(ByteReader& r) {
  Dataset d;
  d.name = r.str("dataset name");
  auto n = r.u16("dataset tensor count");
  for (std::uint16_t i = 0; i < n; ++i) {
    auto field = r.str("dataset field name");
    d.tensors.insert_or_assign(field, decode_tensor(r));
  }
  auto m = r.u16("dataset meta count");
  for (std::uint16_t i = 0; i < m; ++i) {
    auto key = r.str("dataset meta key");
    d.meta[key] = read_strings(r, "dataset meta strings");
  }
  return d;
}

std::vector<std::uint8_t> encode_request(const Request& req) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(req.code));
  switch (req.code) {
    case Command::kPing:
    case Command::kShutdown:
      break;
    case Command::kPutTensor:
      w.str(req.key);
      encode_tensor(w, req.tensor);
      break;
    case Command::kGetTensor:
    case Command::kGetDataset:
    case Command::kListLength:
    case Command::kListGet:
    case Command::kModelExists:
      w.str(req.key);
      break;
    case Command::kDelete:
    case Command::kExists:
      w.u8(static_cast<std::uint8_t>(req.kind));
      w.str(req.key);
      break;
    case Command::kPutDataset:
      encode_dataset(w, req.dataset);
      break;
    case Command::kListAppend:
      w.str(req.key);
      w.str(req.key2);
      break;
    case Command::kPutModel:
      w.str(req.key);
      w.raw(req.model);
      break;
    case Command::kRunModel:
      w.str(req.key);
      write_strings(w, req.inputs);
      write_strings(w, req.outputs);
      break;
  }
  return w.take();
}

Request decode_request(std::span<const std::uint8_t> payload) {
  if (payload.empty()) throw Error(ErrorCode::kMalformed, "empty payload");
  ByteReader r(payload);
  Request req;
  auto code = r.u8("command");
  if (code > kMaxCommand) {
    throw Error(ErrorCode::kProtocol, "unknown command " + std::to_string(code));
  }
  req.code = static_cast<Command>(code);
  switch (req.code) {
    case Command::kPing:
    case Command::kShutdown:
      break;
    case Command::kPutTensor:
      req.key = r.str("key");
      req.tensor = decode_tensor(r);
      break;
    case Command::kGetTensor:
    case Command::kGetDataset:
    case Command::kListLength:
    case Command::kListGet:
    case Command::kModelExists:
      req.key = r.str("key");
      break;
    case Command::kDelete:
    case Command::kExists:
      req.kind = read_kind(r);
      req.key = r.str("key");
      break;
    case Command::kPutDataset:
      req.dataset = decode_dataset(r);
      req.key = req.dataset.name;
      break;
    case Command::kListAppend:
      req.key = r.str("list key");
      req.key2 = r.str("dataset key");
      break;
    case Command::kPutModel: {
      req.key = r.str("model key");
      auto rest = r.rest();
      req.model.assign(rest.begin(), rest.end());
      break;
    }
    case Command::kRunModel:
      req.key = r.str("model key");
      req.inputs = read_strings(r, "input keys");
      req.outputs = read_strings(r, "output keys");
      break;
  }
  if (!r.done()) throw Error(ErrorCode::kMalformed, "trailing bytes after request body");
  return req;
}

std::vector<std::uint8_t> encode_response(const Response& resp) {
  std::vector<std::uint8_t> out;
  out.reserve(resp.body.size() + 1);
  out.push_back(static_cast<std::uint8_t>(resp.status));
  out.insert(out.end(), resp.body.begin(), resp.body.end());
  return out;
}

Response decode_response(std::span<const std::uint8_t> payload) {
  if (payload.empty()) throw Error(ErrorCode::kProtocol, "empty response");
  if (payload[0] > static_cast<std::uint8_t>(Status::kError)) {
    throw Error(ErrorCode::kProtocol, "bad status byte " + std::to_string(payload[0]));
  }
  return Response{static_cast<Status>(payload[0]),
                  std::vector<std::uint8_t>(payload.begin() + 1, payload.end())};
}

std::vector<std::uint8_t> handle_request(Store& store,
                                         std::span<const std::uint8_t> payload,
                                         bool& shutdown) {
  shutdown = false;
  Request req;
  try {
    req = decode_request(payload);
  } catch (const Error& e) {
    // Body-format failures report the bare reason, e.g. "short tensor body";
    // semantic ones (ZERO_SIZED, unknown command) keep their code prefix.
    store.record_rejection(e.code());
    return encode_response(error(e.code() == ErrorCode::kMalformed ? e.message() : e.what()));
  }
  try {
    return encode_response(execute(store, req, shutdown));
  } catch (const std::exception& e) {
    // Store failures keep their "CODE: reason" form so clients can rethrow
    // with the original error code.
    return encode_response(error(e.what()));
  }
}

}  // namespace simorch::wire
