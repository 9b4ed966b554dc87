// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_MESHMOTION_HPP_
#define SIMORCH_MESHMOTION_HPP_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "simorch/client.hpp"
#include "simorch/mesh.hpp"
#include "simorch/workers.hpp"

namespace simorch::meshmotion {

inline constexpr const char* kPointsList = "mm.points";
inline constexpr const char* kDisplacementsList = "mm.displacements";
inline constexpr const char* kModelKey = "mm.model";
inline constexpr const char* kModelFlag = "mm.model_available";
inline constexpr const char* kEndTimeKey = "end_time";
inline constexpr const char* kPointsPublisher = "mm_points";
inline constexpr const char* kDisplacementsPublisher = "mm_displacements";
inline constexpr const char* kPointsField = "points";
inline constexpr const char* kDisplacementsField = "displacements";

struct MeshMotionConfig {
  std::size_t n_r = 16;
  std::size_t n_theta = 64;
  double r_in = 0.25;
  double r_out = 1.0;
  std::size_t ranks = 4;
  mesh::Decomposition decomposition = mesh::Decomposition::kSectors;
  std::size_t steps = 40;
  double dt = 0.05;
  mesh::BoundaryMotion motion;
  std::vector<std::size_t> hidden{64, 64};
  std::uint64_t seed = 1;
  double learning_rate = 1e-2;
  std::size_t max_epochs = 2000;
  double target_mse = 1e-6;
  PollSpec poll{std::chrono::milliseconds(10), 6000};
  /// Budget for the very first model; on exhaustion step 1 falls back to
  /// the Laplacian reference.
  PollSpec bootstrap_poll{std::chrono::milliseconds(10), 3000};

  /// Throws INVALID_CONFIG.
  void validate() const;
  mesh::AnnulusMesh make_mesh() const;
  double t_end() const { return static_cast<double>(steps) * dt; }
  /// Step (1-based) whose time is closest to the peak rotation.
  std::size_t peak_step() const;
};

struct TrainerStep {
  std::size_t step = 0;
  std::size_t samples = 0;
  std::size_t epochs = 0;
  double mse = 0.0;      // normalized units
  double seconds = 0.0;  // training time
};

struct TrainerReport {
  std::vector<TrainerStep> steps;

  void write_csv(const std::filesystem::path& path) const;
  static TrainerReport read_csv(const std::filesystem::path& path);
};

/// Trainer loop: collect every rank's boundary datasets for a step, train
/// the persistent network, publish it and signal availability. Returns
/// once "end_time" appears. Throws TIMEOUT when a step's lists never fill.
TrainerReport run_trainer(Client& client, const MeshMotionConfig& config);

struct SimulationStep {
  std::size_t step = 0;
  double time = 0.0;
  double angle_deg = 0.0;
  bool used_model = false;       // false only for a step-1 bootstrap fallback
  double model_wait_s = 0.0;
  double max_boundary_disp = 0.0;
  double rms_interior_error = 0.0;     // absolute, vs Laplacian reference
  double max_nonorth_ann = 0.0;        // degrees; NaN when inverted
  double max_nonorth_ref = 0.0;
  bool inverted = false;
  bool boundary_exact = true;
};

struct PeakSnapshot {
  std::size_t step = 0;
  std::vector<mesh::Vec2> ann_points;
  std::vector<mesh::Vec2> ref_points;
  std::vector<double> ann_angles;  // per cell, empty when inverted
  std::vector<double> ref_angles;
};

struct SimulationReport {
  std::vector<SimulationStep> steps;
  PeakSnapshot peak;

  /// simulation_steps.csv, peak point clouds (.bin + .json) and
  /// nonorthogonality_peak.csv.
  void write(const std::filesystem::path& dir) const;
  static std::vector<SimulationStep> read_steps(const std::filesystem::path& path);
};

/// Simulation loop with config.ranks ranks as threads, each on its own client
/// from `connect`. Throws MODEL_STARVED naming the step.
SimulationReport run_simulation(const std::function<Client()>& connect,
                                const MeshMotionConfig& config);

struct MeshMotionReport {
  std::vector<TrainerStep> training;
  std::vector<SimulationStep> simulation;
  std::size_t peak_step = 0;
  double peak_rms_error = 0.0;
  double peak_max_boundary = 0.0;
  double peak_rms_relative = 0.0;  // rms error / max boundary displacement
  double peak_nonorth_ann = 0.0;
  double peak_nonorth_ref = 0.0;
  bool any_inverted = false;
  bool boundary_exact = true;
  std::vector<std::pair<std::string, double>> timings;

  /// meshmotion_steps.csv and meshmotion_summary.json.
  void write(const std::filesystem::path& dir) const;
};

/// Output file names shared by the workers and the driver.
inline constexpr const char* kTrainerCsv = "trainer_steps.csv";
inline constexpr const char* kSimulationCsv = "simulation_steps.csv";

/// Worker 0 is the trainer, worker 1 the simulation; each writes its own
/// CSV into `dir`. The driver clears stale protocol keys, starts both,
/// joins them and merges their reports. Failures raise WORKFLOW.
MeshMotionReport run_meshmotion(Client& client, const MeshMotionConfig& config,
                                WorkerGroup& workers, const std::filesystem::path& dir);

}  // namespace simorch::meshmotion

#endif  // SIMORCH_MESHMOTION_HPP_
