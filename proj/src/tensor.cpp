// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include "simorch/tensor.hpp"

#include <cstring>

#include "simorch/error.hpp"

namespace simorch {

std::size_t shape_product(std::span<const std::size_t> dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void validate_shape(std::span<const std::size_t> dims, std::size_t length) {
  if (dims.empty()) throw Error(ErrorCode::kMalformed, "tensor has no dims");
  for (auto d : dims) {
    if (d == 0) throw Error(ErrorCode::kZeroSized, "tensor has a zero dim");
  }
  if (shape_product(dims) != length) {
    throw Error(ErrorCode::kMalformed,
                "data length " + std::to_string(length) +
                    " != product(dims) " +
                    std::to_string(shape_product(dims)));
  }
}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  validate_shape(dims_, data_.size());
}

Tensor Tensor::flag() { return Tensor({1}, {1.0}); }

Tensor Tensor::zeros(std::vector<std::size_t> dims) {
  auto n = shape_product(dims);
  return Tensor(std::move(dims), std::vector<double>(n, 0.0));
}

std::size_t Tensor::cols() const {
  return dims_.size() < 2 ? 1 : dims_.back();
}

std::size_t Tensor::rows() const {
  auto c = cols();
  return c == 0 ? 0 : data_.size() / c;
}

bool Tensor::bit_equal(const Tensor& other) const {
  return dims_ == other.dims_ && data_.size() == other.data_.size() &&
         (data_.empty() ||
          std::memcmp(data_.data(), other.data_.data(),
                      data_.size() * sizeof(double)) == 0);
}

void Dataset::add_tensor(const std::string& field, Tensor t) {
  validate_shape(t.dims(), t.size());
  tensors.insert_or_assign(field, std::move(t));
}

void Dataset::add_meta_string(const std::string& key, std::string value) {
  meta[key].push_back(std::move(value));
}

const Tensor& Dataset::tensor(const std::string& field) const {
  auto it = tensors.find(field);
  if (it == tensors.end()) {
    throw Error(ErrorCode::kNotFound,
                "dataset '" + name + "' has no tensor '" + field + "'");
  }
  return it->second;
}

const std::vector<std::string>& Dataset::meta_strings(
    const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) {
    throw Error(ErrorCode::kNotFound,
                "dataset '" + name + "' has no meta key '" + key + "'");
  }
  return it->second;
}

}  // namespace simorch
