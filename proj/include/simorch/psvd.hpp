// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_PSVD_HPP_
#define SIMORCH_PSVD_HPP_

// Split-and-merge SVD of a tall snapshot matrix. The matrix is cut into row
// partitions, each partition is factored on its own, and the stacked
// Σ_i·V_iᵀ blocks are factored once more to recover the global SVD.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "simorch/client.hpp"
#include "simorch/linalg.hpp"
#include "simorch/workers.hpp"

namespace simorch::psvd {

using linalg::Matrix;

/// Synthetic snapshots: a sum of orthogonal spatial modes with cos(k·ω·t)
/// time coefficients, plus optional Gaussian noise.
struct SnapshotSpec {
  std::size_t n_points = 2048;
  std::size_t components = 2;
  std::size_t n_snapshots = 64;
  std::size_t true_rank = 4;
  double omega = 0.0;  // 0 selects 2π/n_snapshots
  double noise = 0.0;
  std::uint64_t seed = 1;
  std::vector<std::string> fields{"U"};  // each with `components` columns

  std::size_t state_length() const { return fields.size() * n_points * components; }
};

/// Validates the spec; warns on stderr when the matrix is not tall.
void check_spec(const SnapshotSpec& spec);

/// State vector for one time index. Fields are concatenated, each stored
/// point-major as [n_points, components].
std::vector<double> generate_snapshot(const SnapshotSpec& spec, std::size_t t_index);

/// All snapshots as columns of an M×N matrix.
Matrix assemble(const SnapshotSpec& spec);

/// Per-field RMS scaling applied before stacking mixed fields. Returns the
/// scales; a single field is left untouched with scale 1.
std::vector<double> normalize_fields(Matrix& x, const SnapshotSpec& spec);

struct PartitionPlan {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;  // [begin, end)

  /// S contiguous row ranges whose sizes differ by at most one.
  static PartitionPlan make(std::size_t rows, std::size_t partitions);
  std::size_t size() const { return ranges.size(); }
};

struct LocalFactors {
  Matrix U;    // [rows_i, k_i]
  Matrix SVt;  // [k_i, N]
};

/// Economy SVD of one partition, returned as U_i and Σ_i·V_iᵀ.
LocalFactors factor_partition(const Matrix& x_i);

struct MergeResult {
  Matrix Y;
  linalg::SvdFactors y;              // factors of Y
  std::vector<Matrix> uy_blocks;     // U_yi, one per partition
  std::vector<Matrix> global_u;      // U_i·U_yi, one per partition
  std::vector<double> sigma;         // = y.sigma
  Matrix V;                          // = y.V

  /// Stacks the global U blocks.
  Matrix U() const { return linalg::vstack(global_u); }
};

/// Throws INCOMPLETE when `parts` is empty.
MergeResult merge(const std::vector<LocalFactors>& parts);

/// Rank-r reconstruction rows of one partition: U_i·U_yi[:, :r]·Σ_r·V_rᵀ.
/// Throws RANK_OUT_OF_RANGE.
Matrix reconstruct_partition(const Matrix& u_i, const Matrix& uy_i,
                             const std::vector<double>& sigma, const Matrix& v, std::size_t r);

/// Full split/merge on an in-memory matrix.
MergeResult partitioned_svd(const Matrix& x, std::size_t partitions);

// Store-mediated workflow.

struct SvdConfig {
  SnapshotSpec snapshots;
  std::size_t partitions = 4;
  std::size_t rank = 4;
  std::string publisher = "snap";
  PollSpec poll{std::chrono::milliseconds(10), 6000};
};

/// Store key helpers.
std::string part_key(std::size_t i, const std::string& what);  // "svd.part.<i>.<what>"
inline constexpr const char* kSigmaKey = "svd.sigma";
inline constexpr const char* kVKey = "svd.V";
inline constexpr const char* kMergedFlag = "svd.merged";
std::string uy_key(std::size_t i);
std::string global_u_key(std::size_t i);
std::string recon_key(std::size_t i);

/// Publishes every snapshot through a FieldPublisher (one dataset per time
/// index, rank 0) after writing the publisher metadata.
void produce_snapshots(Client& client, const SvdConfig& config);

/// Assembles partition `i` from the store, writes U_i and Σ_i·V_iᵀ, then
/// waits for the merge and writes its rank-r reconstruction, deleting U_i.
/// Throws WORKER_STARVED when snapshots or the merge never appear.
void run_partition_worker(Client& client, const SvdConfig& config, std::size_t i);

/// Reads all worker outputs, merges, and writes Σ, V, U_yi and global U
/// blocks, then sets the merged flag. Throws INCOMPLETE.
MergeResult merge_from_store(Client& client, const SvdConfig& config);

struct SvdReport {
  std::vector<double> sigma;
  std::size_t rank = 0;
  double reconstruction_error = 0.0;   // ‖X − X_r‖_F
  double relative_error = 0.0;         // ‖X − X_r‖_F / ‖X‖_F
  double tail_energy = 0.0;            // Σ_{i>r} σ_i²
  std::uint64_t data_matrix_bytes = 0;
  std::uint64_t reference_bytes = 0;   // M = 3e6, N = 1000
  std::size_t leftover_u_keys = 0;
  Matrix modes;                        // leading r global left singular vectors [M, r]
  std::vector<std::pair<std::string, double>> timings;  // seconds

  /// Writes singular_values.csv, summary.json and modes.bin + modes.json.
  void write(const std::filesystem::path& dir, const SnapshotSpec& spec) const;
};

/// Same computation without a store, for cross-checks and the S=1 path.
SvdReport run_in_process(const SvdConfig& config);

/// Driver: starts S workers, streams snapshots, merges, waits for the
/// reconstructions and builds the report. Worker failures are aggregated
/// into one WORKFLOW error.
SvdReport run_svd_workflow(Client& client, const SvdConfig& config, WorkerGroup& workers);

}  // namespace simorch::psvd

#endif  // SIMORCH_PSVD_HPP_
