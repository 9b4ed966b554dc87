// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_TESTS_MESH_ORACLES_HPP_
#define SIMORCH_TESTS_MESH_ORACLES_HPP_

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "simorch/mesh.hpp"

namespace simorch::testing {

// Direct sparse solve of the same uniform-weight system, assembled from the
// mesh edge list rather than the structured stencil.
inline std::vector<mesh::Vec2> sparse_laplacian(const mesh::AnnulusMesh& m,
                                                const std::vector<mesh::Vec2>& d) {
  const auto interior = m.interior_points();
  std::vector<long> slot(m.n_points(), -1);
  for (std::size_t k = 0; k < interior.size(); ++k) slot[interior[k]] = static_cast<long>(k);
  std::set<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t c = 0; c < m.n_cells(); ++c) {
    auto q = m.cell(c);
    for (int k = 0; k < 4; ++k) {
      auto a = q[k], b = q[(k + 1) % 4];
      edges.insert({std::min(a, b), std::max(a, b)});
    }
  }
  const auto n = static_cast<Eigen::Index>(interior.size());
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 2);
  for (auto [a, b] : edges) {
    for (auto [u, v] : {std::pair{a, b}, std::pair{b, a}}) {
      if (slot[u] < 0) continue;
      trip.emplace_back(slot[u], slot[u], 1.0);
      if (slot[v] >= 0) {
        trip.emplace_back(slot[u], slot[v], -1.0);
      } else {
        rhs(slot[u], 0) += d[v][0];
        rhs(slot[u], 1) += d[v][1];
      }
    }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
  Eigen::MatrixXd x = lu.solve(rhs);
  auto out = d;
  for (std::size_t k = 0; k < interior.size(); ++k) out[interior[k]] = {x(k, 0), x(k, 1)};
  return out;
}

// Per-cell mean non-orthogonality in degrees, from cell adjacency found by
// shared edges. Returns an empty vector if any cell is inverted.
inline std::vector<double> cell_nonorthogonality(const mesh::AnnulusMesh& m,
                                                 const std::vector<mesh::Vec2>& pts) {
  const std::size_t nc = m.n_cells();
  std::vector<mesh::Vec2> centroid(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    auto q = m.cell(c);
    double a = 0.0, cx = 0.0, cy = 0.0;
    for (int k = 0; k < 4; ++k) {
      const auto& p = pts[q[k]];
      const auto& r = pts[q[(k + 1) % 4]];
      const double w = p[0] * r[1] - r[0] * p[1];
      a += w;
      cx += (p[0] + r[0]) * w;
      cy += (p[1] + r[1]) * w;
    }
    if (!(a > 0.0)) return {};
    centroid[c] = {cx / (3.0 * a), cy / (3.0 * a)};
  }
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> edge_cells;
  for (std::size_t c = 0; c < nc; ++c) {
    auto q = m.cell(c);
    for (int k = 0; k < 4; ++k)
      edge_cells[{std::min(q[k], q[(k + 1) % 4]), std::max(q[k], q[(k + 1) % 4])}].push_back(c);
  }
  std::vector<double> sum(nc, 0.0);
  std::vector<int> count(nc, 0);
  for (const auto& [e, cells] : edge_cells) {
    if (cells.size() != 2) continue;
    const auto& a = pts[e.first];
    const auto& b = pts[e.second];
    const double nx = b[1] - a[1], ny = a[0] - b[0];
    const double dx = centroid[cells[1]][0] - centroid[cells[0]][0];
    const double dy = centroid[cells[1]][1] - centroid[cells[0]][1];
    const double cosang = std::fabs(nx * dx + ny * dy) / (std::hypot(nx, ny) * std::hypot(dx, dy));
    const double deg = std::acos(std::min(1.0, cosang)) * 180.0 / M_PI;
    for (auto c : cells) sum[c] += deg, ++count[c];
  }
  for (std::size_t c = 0; c < nc; ++c) sum[c] = count[c] ? sum[c] / count[c] : 0.0;
  return sum;
}

}  // namespace simorch::testing

#endif  // SIMORCH_TESTS_MESH_ORACLES_HPP_
