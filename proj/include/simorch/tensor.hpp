// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_TENSOR_HPP_
#define SIMORCH_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace simorch {

enum class DType : std::uint8_t { kFloat64 = 0 };

/// Row-major n-dimensional array of doubles. Construction validates the
/// shape: dims non-empty, every dim >= 1, data length == product(dims).
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::size_t> dims, std::vector<double> data);

  /// One-element tensor holding 1.0; the flag convention.
  static Tensor flag();
  /// Zero-filled tensor of the given shape.
  static Tensor zeros(std::vector<std::size_t> dims);

  DType dtype() const { return DType::kFloat64; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  std::vector<double>& values() { return data_; }

  /// Interpret as [rows, cols] with cols = last dim (1-D tensors are [n, 1]).
  std::size_t rows() const;
  std::size_t cols() const;

  /// Bitwise equality of dims and payload.
  bool bit_equal(const Tensor& other) const;

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> data_;
};

std::size_t shape_product(std::span<const std::size_t> dims);

/// Throws MALFORMED / ZERO_SIZED when (dims, length) violates the tensor
/// invariants.
void validate_shape(std::span<const std::size_t> dims, std::size_t length);

/// Named collection of tensors plus ordered string metadata.
struct Dataset {
  std::string name;
  std::map<std::string, Tensor> tensors;
  std::map<std::string, std::vector<std::string>> meta;

  void add_tensor(const std::string& field, Tensor t);
  void add_meta_string(const std::string& key, std::string value);
  const Tensor& tensor(const std::string& field) const;
  const std::vector<std::string>& meta_strings(const std::string& key) const;
};

}  // namespace simorch

#endif  // SIMORCH_TENSOR_HPP_
