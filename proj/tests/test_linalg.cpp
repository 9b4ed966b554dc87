// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "doctest.h"
#include "linalg_oracles.hpp"
#include "simorch/error.hpp"
#include "simorch/linalg.hpp"

using namespace simorch;
using namespace simorch::linalg;

namespace {

void check_factors(const Matrix& a, const SvdFactors& f) {
  const std::size_t k = std::min(a.rows(), a.cols());
  REQUIRE(f.U.rows() == a.rows());
  REQUIRE(f.U.cols() == k);
  REQUIRE(f.V.rows() == a.cols());
  REQUIRE(f.V.cols() == k);
  CHECK(orthonormality_error(f.U) <= 1e-10);
  CHECK(orthonormality_error(f.V) <= 1e-10);
  for (std::size_t i = 0; i + 1 < k; ++i) CHECK(f.sigma[i] >= f.sigma[i + 1]);
  CHECK(f.sigma.back() >= 0.0);
  CHECK(frobenius(f.reconstruct() - a) <= 1e-10 * std::max(frobenius(a), 1e-300));
  // Sign convention.
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < f.U.rows(); ++i)
      if (std::fabs(f.U(i, j)) > std::fabs(f.U(arg, j))) arg = i;
    CHECK(f.U(arg, j) >= 0.0);
  }
}

}  // namespace

TEST_CASE("identity svd") {
  auto f = svd(Matrix::identity(3));
  CHECK(f.sigma == std::vector<double>{1, 1, 1});
  CHECK(f.U.data() == Matrix::identity(3).data());
  CHECK(f.V.data() == Matrix::identity(3).data());
}

TEST_CASE("rank-one outer product") {
  // |a| = 2, |b| = 3
  std::vector<double> a{0.0, 2.0 * 0.6, 2.0 * 0.8}, b{3.0, 0.0};
  Matrix m(3, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) m(i, j) = a[i] * b[j];
  auto f = svd(m);
  CHECK(f.sigma[0] == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(f.sigma[1] == 0.0);
  check_factors(m, f);
}

TEST_CASE("random 50x8 matches the bidiagonal oracle") {
  std::mt19937_64 rng(8);
  auto a = testing::random_matrix(rng, 50, 8);
  auto f = svd(a);
  CHECK(testing::max_relative_diff(f.sigma, testing::oracle_sigma(a)) <= 1e-12);
  check_factors(a, f);
}

TEST_CASE("property sweep on random shapes") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> dim(1, 60);
  for (int trial = 0; trial < 40; ++trial) {
    auto m = dim(rng), n = dim(rng);
    if (trial == 0) m = 200, n = 40;
    if (trial == 1) m = 30, n = 200;
    auto a = testing::random_matrix(rng, m, n);
    auto f = svd(a);
    check_factors(a, f);
    CHECK(testing::max_relative_diff(f.sigma, testing::oracle_sigma(a)) <= 1e-11);

    // Transpose swaps the roles of U and V.
    auto t = svd(a.transpose());
    CHECK(testing::max_relative_diff(t.sigma, f.sigma) <= 1e-12);
    CHECK(testing::oracle_max_angle_sine(t.V, f.U) <= 1e-8);

    // Positive scaling scales the singular values.
    Matrix scaled = a;
    for (auto& v : scaled.data()) v *= 3.5;
    auto s = svd(scaled);
    for (std::size_t i = 0; i < f.sigma.size(); ++i)
      CHECK(s.sigma[i] == doctest::Approx(3.5 * f.sigma[i]).epsilon(1e-12));
  }
}

TEST_CASE("rank-deficient and zero matrices keep orthonormal factors") {
  Matrix z(5, 3);
  auto f = svd(z);
  CHECK(f.sigma == std::vector<double>{0, 0, 0});
  check_factors(z, f);

  std::mt19937_64 rng(4);
  auto b = testing::random_matrix(rng, 40, 2);
  auto c = testing::random_matrix(rng, 2, 10);
  auto low = matmul(b, c);
  auto g = svd(low);
  check_factors(low, g);
  CHECK(g.sigma[2] <= 1e-13 * g.sigma[0]);
}

TEST_CASE("truncate and Eckart-Young") {
  std::mt19937_64 rng(64);
  auto a = testing::random_matrix(rng, 64, 16);
  auto f = svd(a);
  auto same = truncate(f, 16);
  CHECK(same.sigma == f.sigma);
  CHECK(same.U.data() == f.U.data());
  for (std::size_t r = 1; r <= 16; ++r) {
    auto t = truncate(f, r);
    double err = frobenius(t.reconstruct() - a);
    double tail = 0.0;
    for (std::size_t i = r; i < 16; ++i) tail += f.sigma[i] * f.sigma[i];
    if (r < 16) CHECK(err * err == doctest::Approx(tail).epsilon(1e-8));
  }
  CHECK_THROWS_AS(truncate(f, 0), Error);
  CHECK_THROWS_AS(truncate(f, 17), Error);
}

TEST_CASE("cholesky solve") {
  auto x = cholesky_solve(Matrix::identity(3), Matrix(3, 2, {1, 2, 3, 4, 5, 6}));
  CHECK(x.data() == std::vector<double>{1, 2, 3, 4, 5, 6});
  auto y = cholesky_solve(Matrix(1, 1, {4.0}), Matrix(1, 1, {2.0}));
  CHECK(y(0, 0) == 0.5);

  std::mt19937_64 rng(20);
  auto g = testing::random_matrix(rng, 20, 20);
  auto a = matmul_tn(g, g);
  for (std::size_t i = 0; i < 20; ++i) a(i, i) += 1.0;
  auto b = testing::random_matrix(rng, 20, 3);
  auto sol = cholesky_solve(a, b);
  CHECK(frobenius(matmul(a, sol) - b) <= 1e-10 * frobenius(b));

  // Eigen's LLT gives the same log determinant.
  auto c = Cholesky::factor(a);
  Eigen::LLT<Eigen::MatrixXd> llt(testing::to_eigen(a));
  double ld = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  CHECK(c.log_det() == doctest::Approx(ld).epsilon(1e-12));
}

TEST_CASE("cholesky jitter and failure") {
  // Singular PSD matrix needs a small jitter.
  Matrix psd(2, 2, {1, 1, 1, 1});
  auto c = Cholesky::factor(psd);
  CHECK(c.jitter > 0.0);
  CHECK(c.jitter <= 1e-7);
  Matrix indefinite(2, 2, {1, 0, 0, -1});
  try {
    Cholesky::factor(indefinite);
    FAIL("expected NOT_SPD");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotSpd);
  }
}

TEST_CASE("principal angles agree with the oracle") {
  std::mt19937_64 rng(9);
  auto a = svd(testing::random_matrix(rng, 30, 4)).U;
  auto b = svd(testing::random_matrix(rng, 30, 4)).U;
  auto s = principal_angle_sines(a, b);
  CHECK(s[0] == doctest::Approx(testing::oracle_max_angle_sine(a, b)).epsilon(1e-10));
  auto self = principal_angle_sines(a, a);
  CHECK(self[0] <= 1e-14);
}

TEST_CASE("non-finite input is rejected") {
  Matrix m(2, 2, {1, std::nan(""), 0, 1});
  CHECK_THROWS_AS(svd(m), Error);
}
