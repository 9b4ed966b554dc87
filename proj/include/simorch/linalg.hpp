// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_LINALG_HPP_
#define SIMORCH_LINALG_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace simorch::linalg {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Throws MALFORMED unless data.size() == rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  Matrix transpose() const;
  /// Rows [begin, end).
  Matrix row_block(std::size_t begin, std::size_t end) const;
  /// Columns [0, n).
  Matrix leading_cols(std::size_t n) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ·b without forming the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
double frobenius(const Matrix& a);
/// Stacks matrices with equal column counts.
Matrix vstack(const std::vector<Matrix>& blocks);
/// Scales column j by s[j].
Matrix scale_cols(const Matrix& a, std::span<const double> s);

struct SvdFactors {
  Matrix U;                   // [m, k]
  std::vector<double> sigma;  // k, nonincreasing
  Matrix V;                   // [n, k]

  /// U·diag(sigma)·Vᵀ
  Matrix reconstruct() const;
};

struct SvdOptions {
  int max_sweeps = 60;
};

/// Economy SVD by one-sided Jacobi rotations. The largest-magnitude entry of
/// every U column is nonnegative (first index on ties) and V is signed to
/// match. Throws NO_CONVERGENCE.
SvdFactors svd(const Matrix& a, const SvdOptions& options = {});

/// Keeps the leading r triplets; throws RANK_OUT_OF_RANGE unless 1 <= r <= k.
SvdFactors truncate(const SvdFactors& f, std::size_t r);

/// Applies the sign convention in place.
void canonicalize_signs(SvdFactors& f);

/// Lower Cholesky factor with optional diagonal jitter.
struct Cholesky {
  Matrix L;
  double jitter = 0.0;

  /// Tries A, then A + j·I with j = 1e-10·trace(A)/n escalated ×10 up to three
  /// times. Throws NOT_SPD.
  static Cholesky factor(const Matrix& a);

  std::vector<double> solve(std::span<const double> b) const;
  Matrix solve(const Matrix& b) const;
  /// Solves L·x = b.
  std::vector<double> solve_lower(std::span<const double> b) const;
  double log_det() const;
};

Matrix cholesky_solve(const Matrix& a, const Matrix& b);

/// max |QᵀQ - I|.
double orthonormality_error(const Matrix& q);

/// Sines of the principal angles between the column spaces of two
/// orthonormal bases with the same column count, largest first.
std::vector<double> principal_angle_sines(const Matrix& q1, const Matrix& q2);

}  // namespace simorch::linalg

#endif  // SIMORCH_LINALG_HPP_
