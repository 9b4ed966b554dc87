// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include "simorch/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "simorch/error.hpp"

namespace simorch::mesh {

AnnulusMesh::AnnulusMesh(std::size_t n_r, std::size_t n_theta, double r_in, double r_out)
    : n_r_(n_r), n_theta_(n_theta), r_in_(r_in), r_out_(r_out) {
  if (n_r < 1 || n_theta < 3) throw Error(ErrorCode::kInvalidConfig, "mesh needs n_r >= 1 and n_theta >= 3");
  if (!(r_in > 0.0 && r_out > r_in)) throw Error(ErrorCode::kInvalidConfig, "need 0 < r_in < r_out");
  points_.reserve((n_r + 1) * n_theta);
  for (std::size_t i = 0; i <= n_r; ++i) {
    const double r = r_in + (r_out - r_in) * static_cast<double>(i) / static_cast<double>(n_r);
    for (std::size_t j = 0; j < n_theta; ++j) {
      const double phi = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n_theta);
      points_.push_back({r * std::cos(phi), r * std::sin(phi)});
    }
  }
  // Cell (i, j) has index i * n_theta + j.
  for (std::size_t i = 0; i < n_r; ++i) {
    for (std::size_t j = 0; j < n_theta; ++j) {
      // Radial edge between cells (i, j-1) and (i, j).
      const std::size_t left = i * n_theta + (j + n_theta - 1) % n_theta;
      faces_.push_back({point_index(i, j), point_index(i + 1, j), left, i * n_theta + j});
    }
  }
  for (std::size_t i = 1; i < n_r; ++i) {
    for (std::size_t j = 0; j < n_theta; ++j) {
      // Arc edge between cells (i-1, j) and (i, j).
      faces_.push_back({point_index(i, j), point_index(i, j + 1), (i - 1) * n_theta + j,
                        i * n_theta + j});
    }
  }
}

std::array<std::size_t, 4> AnnulusMesh::cell(std::size_t c) const {
  const std::size_t i = c / n_theta_, j = c % n_theta_;
  return {point_index(i, j), point_index(i + 1, j), point_index(i + 1, j + 1),
          point_index(i, j + 1)};
}

const std::vector<std::string>& AnnulusMesh::patch_names() {
  static const std::vector<std::string> names{"cylinder", "outerWall"};
  return names;
}

int AnnulusMesh::patch_of(std::size_t p) const {
  const std::size_t i = radial_index(p);
  if (i == 0) return kCylinder;
  if (i == n_r_) return kOuterWall;
  return kInterior;
}

std::vector<std::size_t> AnnulusMesh::boundary_points() const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < n_points(); ++p)
    if (patch_of(p) != kInterior) out.push_back(p);
  return out;
}

std::vector<std::size_t> AnnulusMesh::interior_points() const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < n_points(); ++p)
    if (patch_of(p) == kInterior) out.push_back(p);
  return out;
}

Decomposition parse_decomposition(const std::string& name) {
  if (name == "sectors") return Decomposition::kSectors;
  if (name == "split") return Decomposition::kSplit;
  throw Error(ErrorCode::kInvalidConfig, "unknown decomposition '" + name + "'");
}

std::string to_string(Decomposition d) { return d == Decomposition::kSectors ? "sectors" : "split"; }

namespace {

std::size_t sector_of(std::size_t j, std::size_t n_theta, std::size_t parts) {
  // Contiguous sectors with sizes differing by at most one.
  const std::size_t base = n_theta / parts, extra = n_theta % parts;
  const std::size_t big = extra * (base + 1);
  return j < big ? j / (base + 1) : extra + (j - big) / base;
}

}  // namespace

RankLayout decompose(const AnnulusMesh& mesh, std::size_t ranks, Decomposition how) {
  if (ranks < 1) throw Error(ErrorCode::kInvalidConfig, "ranks must be ≥ 1");
  if (ranks > mesh.n_theta()) throw Error(ErrorCode::kInvalidConfig, "more ranks than angular cells");
  RankLayout layout;
  layout.owner.resize(mesh.n_points());
  layout.owned.resize(ranks);
  layout.patches.assign(ranks, std::vector<std::vector<std::size_t>>(2));
  const bool split = how == Decomposition::kSplit && ranks >= 2;
  const std::size_t inner_ranks = split ? ranks / 2 : ranks;
  for (std::size_t p = 0; p < mesh.n_points(); ++p) {
    const std::size_t i = mesh.radial_index(p), j = mesh.angular_index(p);
    std::size_t r;
    if (!split) {
      r = sector_of(j, mesh.n_theta(), ranks);
    } else if (2 * i <= mesh.n_r()) {
      r = sector_of(j, mesh.n_theta(), inner_ranks);
    } else {
      r = inner_ranks + sector_of(j, mesh.n_theta(), ranks - inner_ranks);
    }
    layout.owner[p] = r;
    layout.owned[r].push_back(p);
    const int patch = mesh.patch_of(p);
    if (patch != kInterior) layout.patches[r][patch].push_back(p);
  }
  return layout;
}

double BoundaryMotion::angle_rad(double t) const {
  const double amp = amplitude_deg * std::numbers::pi / 180.0;
  const double half = period / 2.0;
  if (t <= 0.0 || t >= period) return 0.0;
  return t <= half ? amp * t / half : amp * (period - t) / half;
}

std::vector<Vec2> BoundaryMotion::boundary_displacement(const AnnulusMesh& mesh, double t) const {
  const double a = angle_rad(t), c = std::cos(a), s = std::sin(a);
  std::vector<Vec2> d(mesh.n_points(), Vec2{0.0, 0.0});
  for (std::size_t j = 0; j < mesh.n_theta(); ++j) {
    const auto& p = mesh.points()[mesh.point_index(0, j)];
    d[mesh.point_index(0, j)] = {c * p[0] - s * p[1] - p[0], s * p[0] + c * p[1] - p[1]};
  }
  return d;
}

std::vector<Vec2> laplacian_reference(const AnnulusMesh& mesh, const std::vector<Vec2>& d,
                                      const CgOptions& options) {
  if (d.size() != mesh.n_points()) throw Error(ErrorCode::kShapeMismatch, "displacement rows");
  const std::size_t nr = mesh.n_r(), nt = mesh.n_theta();
  const std::size_t n_int = (nr - 1) * nt;  // unknowns: radial rows 1..nr-1
  std::vector<Vec2> out = d;
  if (n_int == 0) return out;
  const std::size_t max_it = options.max_iterations ? options.max_iterations : 10 * mesh.n_points();

  // Unknown u = (i - 1) * nt + j. Each point has 4 neighbours with weight 1.
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 1; i < nr; ++i) {
      for (std::size_t j = 0; j < nt; ++j) {
        const std::size_t u = (i - 1) * nt + j;
        double v = 4.0 * x[u];
        v -= x[(i - 1) * nt + (j + 1) % nt];
        v -= x[(i - 1) * nt + (j + nt - 1) % nt];
        if (i > 1) v -= x[u - nt];
        if (i + 1 < nr) v -= x[u + nt];
        y[u] = v;
      }
    }
  };

  for (int comp = 0; comp < 2; ++comp) {
    std::vector<double> b(n_int, 0.0), x(n_int, 0.0);
    for (std::size_t j = 0; j < nt; ++j) {
      b[j] += d[mesh.point_index(0, j)][comp];
      b[(nr - 2) * nt + j] += d[mesh.point_index(nr, j)][comp];
    }
    double bnorm = 0.0;
    for (double v : b) bnorm += v * v;
    bnorm = std::sqrt(bnorm);
    if (bnorm > 0.0) {
      std::vector<double> r = b, p = b, ap(n_int);
      double rr = bnorm * bnorm;
      std::size_t it = 0;
      while (std::sqrt(rr) > options.tolerance * bnorm) {
        if (++it > max_it) {
          throw Error(ErrorCode::kNoConvergence,
                      "laplacian CG did not converge in " + std::to_string(max_it) + " iterations");
        }
        apply(p, ap);
        double pap = 0.0;
        for (std::size_t k = 0; k < n_int; ++k) pap += p[k] * ap[k];
        const double alpha = rr / pap;
        double rr_new = 0.0;
        for (std::size_t k = 0; k < n_int; ++k) {
          x[k] += alpha * p[k];
          r[k] -= alpha * ap[k];
          rr_new += r[k] * r[k];
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t k = 0; k < n_int; ++k) p[k] = r[k] + beta * p[k];
      }
    }
    for (std::size_t i = 1; i < nr; ++i)
      for (std::size_t j = 0; j < nt; ++j) out[mesh.point_index(i, j)][comp] = x[(i - 1) * nt + j];
  }
  return out;
}

double signed_area(const AnnulusMesh& mesh, const std::vector<Vec2>& pts, std::size_t cell) {
  auto c = mesh.cell(cell);
  double a = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& p = pts[c[k]];
    const auto& q = pts[c[(k + 1) % 4]];
    a += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * a;
}

long first_inverted_cell(const AnnulusMesh& mesh, const std::vector<Vec2>& pts) {
  for (std::size_t c = 0; c < mesh.n_cells(); ++c)
    if (!(signed_area(mesh, pts, c) > 0.0)) return static_cast<long>(c);
  return -1;
}

namespace {

Vec2 centroid(const AnnulusMesh& mesh, const std::vector<Vec2>& pts, std::size_t cell) {
  auto c = mesh.cell(cell);
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& p = pts[c[k]];
    const auto& q = pts[c[(k + 1) % 4]];
    const double cross = p[0] * q[1] - q[0] * p[1];
    a += cross;
    cx += (p[0] + q[0]) * cross;
    cy += (p[1] + q[1]) * cross;
  }
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

}  // namespace

std::vector<double> non_orthogonality(const AnnulusMesh& mesh, const std::vector<Vec2>& pts) {
  if (pts.size() != mesh.n_points()) throw Error(ErrorCode::kShapeMismatch, "point rows");
  const long bad = first_inverted_cell(mesh, pts);
  if (bad >= 0) throw Error(ErrorCode::kInvertedCell, "cell " + std::to_string(bad) + " is inverted");
  std::vector<Vec2> centers(mesh.n_cells());
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) centers[c] = centroid(mesh, pts, c);
  std::vector<double> sum(mesh.n_cells(), 0.0);
  std::vector<int> count(mesh.n_cells(), 0);
  for (const auto& f : mesh.internal_faces()) {
    const Vec2 e{pts[f.b][0] - pts[f.a][0], pts[f.b][1] - pts[f.a][1]};
    const Vec2 n{e[1], -e[0]};
    const Vec2 d{centers[f.neighbour][0] - centers[f.owner][0],
                 centers[f.neighbour][1] - centers[f.owner][1]};
    // atan2 stays accurate near zero where acos does not.
    const double dot = std::fabs(n[0] * d[0] + n[1] * d[1]);
    const double cross = std::fabs(n[0] * d[1] - n[1] * d[0]);
    const double deg = std::atan2(cross, dot) * 180.0 / std::numbers::pi;
    sum[f.owner] += deg;
    sum[f.neighbour] += deg;
    ++count[f.owner];
    ++count[f.neighbour];
  }
  for (std::size_t c = 0; c < sum.size(); ++c) sum[c] /= count[c];
  return sum;
}

std::vector<Vec2> displaced(const AnnulusMesh& mesh, const std::vector<Vec2>& d) {
  std::vector<Vec2> out = mesh.points();
  for (std::size_t p = 0; p < out.size(); ++p) {
    out[p][0] += d[p][0];
    out[p][1] += d[p][1];
  }
  return out;
}

}  // namespace simorch::mesh
