// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_BAYESOPT_HPP_
#define SIMORCH_BAYESOPT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "simorch/client.hpp"
#include "simorch/linalg.hpp"

namespace simorch::bo {

using Point = std::vector<double>;

struct ParameterSpace {
  std::vector<std::string> names;
  Point lower;
  Point upper;

  /// ε, C_μ, C_1, C_2 of the k-ε closure.
  static ParameterSpace turbulence();

  std::size_t dim() const { return names.size(); }
  bool contains(const Point& x) const;
  Point to_unit(const Point& x) const;
  Point from_unit(const Point& z) const;
  void validate() const;
};

/// Standard k-epsilon coefficients used as the first evaluation. C_2 lies
/// below the box bound.
Point default_turbulence_point();

/// EI for minimization; σ = 0 returns max(best − μ, 0).
double expected_improvement(double mu, double sigma, double best);

struct GpHyper {
  double lengthscale = 0.5;
  double signal_variance = 1.0;
};

/// Squared-exponential GP on unit-cube inputs with standardized targets.
class GaussianProcess {
 public:
  static constexpr double kJitter = 1e-8;
  static const std::vector<double>& lengthscale_grid();
  static const std::vector<double>& variance_grid();

  /// Fits with the grid cell of highest log marginal likelihood.
  void fit(std::vector<Point> z, std::vector<double> y);
  /// Fits with fixed hyperparameters.
  void fit(std::vector<Point> z, std::vector<double> y, GpHyper hyper);

  /// Log marginal likelihood of the current data under `hyper`, standardized.
  double log_marginal_likelihood(const GpHyper& hyper) const;

  /// Posterior mean and standard deviation in standardized units.
  std::pair<double, double> predict_standardized(const Point& z) const;
  double standardize(double y) const { return (y - y_mean_) / y_scale_; }
  double best_standardized() const;

  const GpHyper& hyper() const { return hyper_; }
  std::size_t size() const { return z_.size(); }

  /// EI at unit-cube point z against the best observed target.
  double expected_improvement(const Point& z) const;

 private:
  double kernel(const Point& a, const Point& b, const GpHyper& h) const;
  void factor();

  std::vector<Point> z_;
  std::vector<double> y_raw_;
  std::vector<double> y_std_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  GpHyper hyper_;
  linalg::Cholesky chol_;
  std::vector<double> alpha_;
};

struct Observation {
  Point x;
  double y = 0.0;
};

struct AcquisitionOptions {
  std::size_t random_samples = 2048;
  std::size_t polish_steps = 50;
  std::size_t initial_design = 5;  // random asks until this many observations
};

/// Ask-tell optimizer.
class Optimizer {
 public:
  Optimizer(ParameterSpace space, std::uint64_t seed, AcquisitionOptions options = {});

  /// Registers a point that `tell` accepts even outside the box.
  void allow_point(Point x) { allowed_.push_back(std::move(x)); }

  std::vector<Point> ask(std::size_t batch);
  /// Throws OUT_OF_BOUNDS for points outside the box that were not allowed.
  void tell(const std::vector<Observation>& observations);

  const std::vector<Observation>& observations() const { return observed_; }
  std::optional<Observation> best() const;
  const ParameterSpace& space() const { return space_; }
  /// GP fitted to the current observations (refit on demand).
  const GaussianProcess& surrogate();

 private:
  std::vector<Point> random_batch(std::size_t batch);
  Point maximize_ei(const GaussianProcess& gp, const std::vector<Point>& taken);

  ParameterSpace space_;
  AcquisitionOptions options_;
  std::mt19937_64 rng_;
  std::vector<Observation> observed_;
  std::vector<Point> allowed_;
  GaussianProcess gp_;
  bool gp_stale_ = true;
};

// Synthetic blackbox.

struct SyntheticObjective {
  Point weights{1.0, 0.7, 0.5, 0.3};
  Point minimizer{0.35, 0.6, 0.45, 0.55};  // unit cube
  double target = 1.9;

  double p_inlet(const ParameterSpace& space, const Point& x) const;
  double objective(double p_inlet) const { return (p_inlet - target) * (p_inlet - target); }
};

std::string p_inlet_key(const std::string& member);  // "bo.<member>.p_inlet"
std::string done_key(const std::string& member);     // "bo.<member>.done"

/// Evaluates the synthetic model and writes the P_inlet tensor then the done
/// flag.
void blackbox_simulation(Client& client, const Point& params, const std::string& member);

struct Member {
  std::string id;
  Point params;
};

/// Launches blackbox evaluations (threads in tests, processes otherwise).
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual void launch(const std::vector<Member>& batch) = 0;
  /// Waits for the launched members; returns failure diagnostics.
  virtual std::vector<std::string> wait() = 0;
};

struct BoConfig {
  std::size_t iterations = 10;
  std::size_t batch = 5;
  std::uint64_t seed = 0;
  PollSpec poll{std::chrono::milliseconds(10), 6000};
  AcquisitionOptions acquisition;
};

struct Evaluation {
  std::size_t iteration = 0;  // 0 is the default point
  std::size_t eval_index = 0;
  Point x;
  double p_inlet = 0.0;
  double objective = 0.0;
  double best_so_far = 0.0;
};

struct BoHistory {
  std::vector<Evaluation> evaluations;
  Point best_x;
  double best_objective = 0.0;

  /// Best-so-far after each iteration, index 0 being the default point.
  std::vector<double> best_per_iteration() const;
  void write_csv(const std::filesystem::path& path, const ParameterSpace& space) const;
  void write_summary(const std::filesystem::path& path, const ParameterSpace& space) const;
};

/// Evaluates the default point, then runs `iterations` ask/launch/collect/tell
/// rounds. Member failures abort with WORKFLOW.
BoHistory run_bo(Client& client, const BoConfig& config, Evaluator& evaluator);

}  // namespace simorch::bo

#endif  // SIMORCH_BAYESOPT_HPP_
