// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include "simorch/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "simorch/error.hpp"

namespace simorch::linalg {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw Error(ErrorCode::kMalformed, "matrix data length " + std::to_string(data_.size()) +
                                           " != " + std::to_string(rows) + "x" +
                                           std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::row_block(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows_) throw Error(ErrorCode::kShapeMismatch, "row block out of range");
  return Matrix(end - begin, cols_,
                std::vector<double>(data_.begin() + begin * cols_, data_.begin() + end * cols_));
}

Matrix Matrix::leading_cols(std::size_t n) const {
  if (n > cols_) throw Error(ErrorCode::kShapeMismatch, "column count out of range");
  Matrix m(rows_, n);
  for (std::size_t i = 0; i < rows_; ++i)
    std::copy_n(data_.begin() + i * cols_, n, m.data_.begin() + i * n);
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorCode::kShapeMismatch, "matmul inner dimensions");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw Error(ErrorCode::kShapeMismatch, "matmul_tn row counts");
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto ak = a.row(k);
    auto bk = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = ak[i];
      if (aki == 0.0) continue;
      auto ci = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::kShapeMismatch, "matrix difference shapes");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

double frobenius(const Matrix& a) {
  // Scaled accumulation avoids overflow for huge entries.
  double scale = 0.0, ssq = 1.0;
  for (double v : a.data()) {
    if (v == 0.0) continue;
    double av = std::fabs(v);
    if (scale < av) {
      ssq = 1.0 + ssq * (scale / av) * (scale / av);
      scale = av;
    } else {
      ssq += (av / scale) * (av / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

Matrix vstack(const std::vector<Matrix>& blocks) {
  if (blocks.empty()) return {};
  std::size_t rows = 0, cols = blocks.front().cols();
  for (const auto& b : blocks) {
    if (b.cols() != cols) throw Error(ErrorCode::kShapeMismatch, "vstack column counts differ");
    rows += b.rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const auto& b : blocks) data.insert(data.end(), b.data().begin(), b.data().end());
  return Matrix(rows, cols, std::move(data));
}

Matrix scale_cols(const Matrix& a, std::span<const double> s) {
  if (s.size() != a.cols()) throw Error(ErrorCode::kShapeMismatch, "scale_cols length");
  Matrix c = a;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    auto r = c.row(i);
    for (std::size_t j = 0; j < c.cols(); ++j) r[j] *= s[j];
  }
  return c;
}

Matrix SvdFactors::reconstruct() const { return matmul(scale_cols(U, sigma), V.transpose()); }

namespace {

using Columns = std::vector<std::vector<double>>;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Columns to_columns(const Matrix& a) {
  Columns c(a.cols(), std::vector<double>(a.rows()));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c[j][i] = a(i, j);
  return c;
}

Matrix from_columns(const Columns& c, std::size_t rows) {
  Matrix m(rows, c.size());
  for (std::size_t j = 0; j < c.size(); ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = c[j][i];
  return m;
}

// Replaces the columns flagged in `null` with unit vectors orthogonal to all
// other columns.
void complete_basis(Columns& u, const std::vector<bool>& null) {
  const std::size_t m = u.empty() ? 0 : u.front().size();
  std::vector<bool> taken(null.size());
  for (std::size_t j = 0; j < null.size(); ++j) taken[j] = !null[j];
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (!null[j]) continue;
    std::vector<double> best;
    double best_norm = -1.0;
    for (std::size_t e = 0; e < m; ++e) {
      std::vector<double> v(m, 0.0);
      v[e] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < u.size(); ++k) {
          if (!taken[k]) continue;
          double p = dot(u[k], v);
          for (std::size_t i = 0; i < m; ++i) v[i] -= p * u[k][i];
        }
      }
      double n = std::sqrt(dot(v, v));
      if (n > best_norm) {
        best_norm = n;
        best = std::move(v);
        if (n > 0.7) break;
      }
    }
    for (auto& x : best) x /= best_norm;
    u[j] = std::move(best);
    taken[j] = true;
  }
}

// Tall case, m >= n.
SvdFactors jacobi_tall(const Matrix& a, int max_sweeps) {
  const std::size_t m = a.rows(), n = a.cols();
  Columns w = to_columns(a);
  Columns v(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;
  const double tol = std::numeric_limits<double>::epsilon() * std::sqrt(static_cast<double>(m));

  bool converged = n < 2;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = dot(w[p], w[p]);
        const double beta = dot(w[q], w[q]);
        const double gamma = dot(w[p], w[q]);
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::fabs(gamma) <= tol * std::sqrt(alpha) * std::sqrt(beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double wp = w[p][i], wq = w[q][i];
          w[p][i] = c * wp - s * wq;
          w[q][i] = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v[p][i], vq = v[q][i];
          v[p][i] = c * vp - s * vq;
          v[q][i] = s * vp + c * vq;
        }
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw Error(ErrorCode::kNoConvergence,
                "jacobi svd did not converge in " + std::to_string(max_sweeps) + " sweeps");
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(dot(w[j], w[j]));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  Columns u(n), vs(n);
  std::vector<double> s(n);
  std::vector<bool> null(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t k = order[j];
    s[j] = sigma[k];
    vs[j] = std::move(v[k]);
    u[j] = std::move(w[k]);
    if (s[j] > 0.0 && std::isfinite(1.0 / s[j])) {
      for (auto& x : u[j]) x /= s[j];
    } else {
      s[j] = 0.0;
      null[j] = true;
    }
  }
  if (std::find(null.begin(), null.end(), true) != null.end()) complete_basis(u, null);
  return {from_columns(u, m), std::move(s), from_columns(vs, n)};
}

}  // namespace

void canonicalize_signs(SvdFactors& f) {
  for (std::size_t j = 0; j < f.U.cols(); ++j) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < f.U.rows(); ++i) {
      const double a = std::fabs(f.U(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (f.U(arg, j) < 0.0) {
      for (std::size_t i = 0; i < f.U.rows(); ++i) f.U(i, j) = -f.U(i, j);
      for (std::size_t i = 0; i < f.V.rows(); ++i) f.V(i, j) = -f.V(i, j);
    }
  }
}

SvdFactors svd(const Matrix& a, const SvdOptions& options) {
  if (a.rows() == 0 || a.cols() == 0) throw Error(ErrorCode::kShapeMismatch, "svd of empty matrix");
  for (double x : a.data()) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kNoConvergence, "svd input is not finite");
  }
  SvdFactors f;
  if (a.rows() >= a.cols()) {
    f = jacobi_tall(a, options.max_sweeps);
  } else {
    auto t = jacobi_tall(a.transpose(), options.max_sweeps);
    f = {std::move(t.V), std::move(t.sigma), std::move(t.U)};
  }
  canonicalize_signs(f);
  return f;
}

SvdFactors truncate(const SvdFactors& f, std::size_t r) {
  const std::size_t k = f.sigma.size();
  if (r < 1 || r > k) {
    throw Error(ErrorCode::kRankOutOfRange,
                "rank " + std::to_string(r) + " outside [1, " + std::to_string(k) + "]");
  }
  return {f.U.leading_cols(r), std::vector<double>(f.sigma.begin(), f.sigma.begin() + r),
          f.V.leading_cols(r)};
}

namespace {

bool try_factor(const Matrix& a, double jitter, Matrix& l) {
  const std::size_t n = a.rows();
  l = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j) + jitter;
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return false;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return true;
}

}  // namespace

Cholesky Cholesky::factor(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw Error(ErrorCode::kShapeMismatch, "cholesky needs a nonempty square matrix");
  Cholesky c;
  if (try_factor(a, 0.0, c.L)) return c;
  double trace = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) trace += a(i, i);
  double jitter = 1e-10 * std::fabs(trace) / static_cast<double>(a.rows());
  for (int attempt = 0; attempt < 4 && jitter > 0.0; ++attempt, jitter *= 10.0) {
    if (try_factor(a, jitter, c.L)) {
      c.jitter = jitter;
      return c;
    }
  }
  throw Error(ErrorCode::kNotSpd, "matrix is not positive definite after jitter");
}

std::vector<double> Cholesky::solve_lower(std::span<const double> b) const {
  const std::size_t n = L.rows();
  if (b.size() != n) throw Error(ErrorCode::kShapeMismatch, "cholesky rhs length");
  std::vector<double> y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= L(i, k) * y[k];
    y[i] /= L(i, i);
  }
  return y;
}

std::vector<double> Cholesky::solve(std::span<const double> b) const {
  auto x = solve_lower(b);
  const std::size_t n = L.rows();
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) x[ii] -= L(k, ii) * x[k];
    x[ii] /= L(ii, ii);
  }
  return x;
}

Matrix Cholesky::solve(const Matrix& b) const {
  if (b.rows() != L.rows()) throw Error(ErrorCode::kShapeMismatch, "cholesky rhs rows");
  Matrix x(b.rows(), b.cols());
  std::vector<double> col(b.rows());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
    auto s = solve(col);
    for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = s[i];
  }
  return x;
}

double Cholesky::log_det() const {
  double s = 0.0;
  for (std::size_t i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
  return 2.0 * s;
}

Matrix cholesky_solve(const Matrix& a, const Matrix& b) { return Cholesky::factor(a).solve(b); }

double orthonormality_error(const Matrix& q) {
  auto g = matmul_tn(q, q);
  double e = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j)
      e = std::max(e, std::fabs(g(i, j) - (i == j ? 1.0 : 0.0)));
  return e;
}

std::vector<double> principal_angle_sines(const Matrix& q1, const Matrix& q2) {
  if (q1.rows() != q2.rows() || q1.cols() != q2.cols())
    throw Error(ErrorCode::kShapeMismatch, "principal angles need equal shapes");
  // Singular values of (I - Q1 Q1ᵀ) Q2 are the sines; accurate for small angles.
  auto residual = q2 - matmul(q1, matmul_tn(q1, q2));
  return svd(residual).sigma;
}

}  // namespace simorch::linalg
