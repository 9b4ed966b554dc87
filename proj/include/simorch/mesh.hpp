// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_MESH_HPP_
#define SIMORCH_MESH_HPP_

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace simorch::mesh {

using Vec2 = std::array<double, 2>;

inline constexpr int kInterior = -1;
inline constexpr int kCylinder = 0;   // inner boundary
inline constexpr int kOuterWall = 1;  // outer boundary

/// Polar quad mesh of an annulus. Point (i, j) sits at radius index
/// i in [0, n_r] and angle index j in [0, n_theta), periodic in j.
class AnnulusMesh {
 public:
  struct Face {
    std::size_t a, b;          // end points
    std::size_t owner, neighbour;
  };

  AnnulusMesh(std::size_t n_r, std::size_t n_theta, double r_in, double r_out);

  std::size_t n_r() const { return n_r_; }
  std::size_t n_theta() const { return n_theta_; }
  double r_in() const { return r_in_; }
  double r_out() const { return r_out_; }

  std::size_t n_points() const { return points_.size(); }
  std::size_t n_cells() const { return n_r_ * n_theta_; }
  std::size_t point_index(std::size_t i, std::size_t j) const { return i * n_theta_ + j % n_theta_; }
  std::size_t radial_index(std::size_t p) const { return p / n_theta_; }
  std::size_t angular_index(std::size_t p) const { return p % n_theta_; }

  const std::vector<Vec2>& points() const { return points_; }
  /// Corner points, counter-clockwise.
  std::array<std::size_t, 4> cell(std::size_t c) const;
  const std::vector<Face>& internal_faces() const { return faces_; }

  static const std::vector<std::string>& patch_names();
  /// kCylinder, kOuterWall or kInterior.
  int patch_of(std::size_t p) const;
  std::vector<std::size_t> boundary_points() const;
  std::vector<std::size_t> interior_points() const;

 private:
  std::size_t n_r_, n_theta_;
  double r_in_, r_out_;
  std::vector<Vec2> points_;
  std::vector<Face> faces_;
};

enum class Decomposition {
  kSectors,  // contiguous angular sectors over all radii
  kSplit,    // inner half of the radii to the first half of the ranks, outer half to the rest
};

Decomposition parse_decomposition(const std::string& name);
std::string to_string(Decomposition d);

/// Ownership of every point by exactly one rank.
struct RankLayout {
  std::vector<std::size_t> owner;                              // per point
  std::vector<std::vector<std::size_t>> owned;                 // per rank, all points
  std::vector<std::vector<std::vector<std::size_t>>> patches;  // [rank][patch] boundary points

  std::size_t ranks() const { return owned.size(); }
};

RankLayout decompose(const AnnulusMesh& mesh, std::size_t ranks, Decomposition how);

/// Inner boundary rotation: 0 -> amplitude -> 0 linearly over one period.
struct BoundaryMotion {
  double amplitude_deg = 30.0;
  double period = 2.0;

  double angle_rad(double t) const;
  /// Total displacement of every boundary point at time t (interior rows 0).
  std::vector<Vec2> boundary_displacement(const AnnulusMesh& mesh, double t) const;
};

struct CgOptions {
  double tolerance = 1e-10;  // relative residual
  std::size_t max_iterations = 0;  // 0 selects 10 * n_points
};

/// Uniform-weight graph Laplacian extension of the boundary values in `d`
/// into the interior, per component, by conjugate gradients. Boundary rows
/// are returned unchanged. Throws NO_CONVERGENCE.
std::vector<Vec2> laplacian_reference(const AnnulusMesh& mesh, const std::vector<Vec2>& d,
                                      const CgOptions& options = {});

double signed_area(const AnnulusMesh& mesh, const std::vector<Vec2>& pts, std::size_t cell);
/// Index of the first cell with non-positive area, or -1.
long first_inverted_cell(const AnnulusMesh& mesh, const std::vector<Vec2>& pts);

/// Per-cell average of the angle between each internal face normal and the
/// line joining the adjacent cell centroids, in degrees. Throws
/// INVERTED_CELL.
std::vector<double> non_orthogonality(const AnnulusMesh& mesh, const std::vector<Vec2>& pts);

std::vector<Vec2> displaced(const AnnulusMesh& mesh, const std::vector<Vec2>& d);

}  // namespace simorch::mesh

#endif  // SIMORCH_MESH_HPP_
