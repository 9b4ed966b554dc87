// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include "simorch/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

#include "json.hpp"
#include "simorch/error.hpp"

namespace simorch::bo {

ParameterSpace ParameterSpace::turbulence() {
  return {{"epsilon", "c_mu", "c1", "c2"}, {2.97, 0.05, 1.1, 2.3}, {74.28, 0.15, 1.5, 3.0}};
}

void ParameterSpace::validate() const {
  if (names.empty() || lower.size() != names.size() || upper.size() != names.size())
    throw Error(ErrorCode::kInvalidConfig, "parameter space dimensions disagree");
  for (std::size_t d = 0; d < dim(); ++d) {
    if (!(lower[d] < upper[d]))
      throw Error(ErrorCode::kInvalidConfig, "empty range for " + names[d]);
  }
}

bool ParameterSpace::contains(const Point& x) const {
  if (x.size() != dim()) return false;
  for (std::size_t d = 0; d < dim(); ++d)
    if (!(x[d] >= lower[d] && x[d] <= upper[d])) return false;
  return true;
}

Point ParameterSpace::to_unit(const Point& x) const {
  if (x.size() != dim()) throw Error(ErrorCode::kShapeMismatch, "point dimension");
  Point z(dim());
  for (std::size_t d = 0; d < dim(); ++d) z[d] = (x[d] - lower[d]) / (upper[d] - lower[d]);
  return z;
}

Point ParameterSpace::from_unit(const Point& z) const {
  Point x(dim());
  for (std::size_t d = 0; d < dim(); ++d) {
    const double u = std::clamp(z[d], 0.0, 1.0);
    x[d] = std::clamp(lower[d] + u * (upper[d] - lower[d]), lower[d], upper[d]);
  }
  return x;
}

Point default_turbulence_point() { return {14.855, 0.09, 1.44, 1.92}; }

double expected_improvement(double mu, double sigma, double best) {
  const double d = best - mu;
  if (!(sigma > 0.0)) return std::max(d, 0.0);
  const double z = d / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(d * cdf + sigma * pdf, 0.0);
}

const std::vector<double>& GaussianProcess::lengthscale_grid() {
  static const std::vector<double> g{0.1, 0.2, 0.5, 1.0};
  return g;
}

const std::vector<double>& GaussianProcess::variance_grid() {
  static const std::vector<double> g{0.25, 1.0, 4.0};
  return g;
}

double GaussianProcess::kernel(const Point& a, const Point& b, const GpHyper& h) const {
  double r2 = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) r2 += (a[d] - b[d]) * (a[d] - b[d]);
  return h.signal_variance * std::exp(-0.5 * r2 / (h.lengthscale * h.lengthscale));
}

namespace {

struct Standardized {
  std::vector<double> y;
  double mean = 0.0;
  double scale = 1.0;
};

Standardized standardize_targets(const std::vector<double>& y) {
  Standardized s;
  s.mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double var = 0.0;
  for (double v : y) var += (v - s.mean) * (v - s.mean);
  var /= static_cast<double>(y.size());
  s.scale = var > 1e-24 ? std::sqrt(var) : 1.0;
  for (double v : y) s.y.push_back((v - s.mean) / s.scale);
  return s;
}

}  // namespace

double GaussianProcess::log_marginal_likelihood(const GpHyper& hyper) const {
  const std::size_t n = z_.size();
  linalg::Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) k(i, j) = k(j, i) = kernel(z_[i], z_[j], hyper);
    k(i, i) += kJitter;
  }
  auto c = linalg::Cholesky::factor(k);
  auto alpha = c.solve(y_std_);
  double fit = 0.0;
  for (std::size_t i = 0; i < n; ++i) fit += y_std_[i] * alpha[i];
  return -0.5 * fit - 0.5 * c.log_det() - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

void GaussianProcess::fit(std::vector<Point> z, std::vector<double> y) {
  fit(std::move(z), std::move(y), GpHyper{});
  double best = -std::numeric_limits<double>::infinity();
  GpHyper chosen = hyper_;
  for (double l : lengthscale_grid()) {
    for (double s : variance_grid()) {
      GpHyper h{l, s};
      double lml;
      try {
        lml = log_marginal_likelihood(h);
      } catch (const Error&) {
        continue;
      }
      if (lml > best) {
        best = lml;
        chosen = h;
      }
    }
  }
  hyper_ = chosen;
  factor();
}

void GaussianProcess::fit(std::vector<Point> z, std::vector<double> y, GpHyper hyper) {
  if (z.empty() || z.size() != y.size())
    throw Error(ErrorCode::kShapeMismatch, "gp needs matching, nonempty inputs and targets");
  z_ = std::move(z);
  y_raw_ = std::move(y);
  auto s = standardize_targets(y_raw_);
  y_std_ = std::move(s.y);
  y_mean_ = s.mean;
  y_scale_ = s.scale;
  hyper_ = hyper;
  factor();
}

void GaussianProcess::factor() {
  const std::size_t n = z_.size();
  linalg::Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) k(i, j) = k(j, i) = kernel(z_[i], z_[j], hyper_);
    k(i, i) += kJitter;
  }
  chol_ = linalg::Cholesky::factor(k);
  alpha_ = chol_.solve(y_std_);
}

std::pair<double, double> GaussianProcess::predict_standardized(const Point& z) const {
  const std::size_t n = z_.size();
  std::vector<double> ks(n);
  for (std::size_t i = 0; i < n; ++i) ks[i] = kernel(z, z_[i], hyper_);
  double mu = 0.0;
  for (std::size_t i = 0; i < n; ++i) mu += ks[i] * alpha_[i];
  auto v = chol_.solve_lower(ks);
  double var = hyper_.signal_variance;
  for (double x : v) var -= x * x;
  return {mu, std::sqrt(std::max(var, 0.0))};
}

double GaussianProcess::best_standardized() const {
  return *std::min_element(y_std_.begin(), y_std_.end());
}

double GaussianProcess::expected_improvement(const Point& z) const {
  auto [mu, sigma] = predict_standardized(z);
  return bo::expected_improvement(mu, sigma, best_standardized());
}

Optimizer::Optimizer(ParameterSpace space, std::uint64_t seed, AcquisitionOptions options)
    : space_(std::move(space)), options_(options), rng_(seed) {
  space_.validate();
}

std::optional<Observation> Optimizer::best() const {
  if (observed_.empty()) return std::nullopt;
  return *std::min_element(observed_.begin(), observed_.end(),
                           [](const Observation& a, const Observation& b) { return a.y < b.y; });
}

void Optimizer::tell(const std::vector<Observation>& observations) {
  for (const auto& o : observations) {
    const bool allowed = std::find(allowed_.begin(), allowed_.end(), o.x) != allowed_.end();
    if (!allowed && !space_.contains(o.x))
      throw Error(ErrorCode::kOutOfBounds, "observation outside the parameter box");
    if (!std::isfinite(o.y)) throw Error(ErrorCode::kInvalidConfig, "non-finite objective");
  }
  observed_.insert(observed_.end(), observations.begin(), observations.end());
  gp_stale_ = true;
}

const GaussianProcess& Optimizer::surrogate() {
  if (observed_.empty()) throw Error(ErrorCode::kIncomplete, "no observations to fit");
  if (gp_stale_) {
    std::vector<Point> z;
    std::vector<double> y;
    for (const auto& o : observed_) {
      z.push_back(space_.to_unit(o.x));
      y.push_back(o.y);
    }
    gp_.fit(std::move(z), std::move(y));
    gp_stale_ = false;
  }
  return gp_;
}

std::vector<Point> Optimizer::random_batch(std::size_t batch) {
  // Latin hypercube in the unit cube.
  const std::size_t d = space_.dim();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> z(batch, Point(d));
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<std::size_t> perm(batch);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng_);
    for (std::size_t i = 0; i < batch; ++i)
      z[i][k] = (static_cast<double>(perm[i]) + u(rng_)) / static_cast<double>(batch);
  }
  std::vector<Point> out;
  for (auto& p : z) out.push_back(space_.from_unit(p));
  return out;
}

namespace {

bool near_any(const Point& z, const std::vector<Point>& others) {
  for (const auto& o : others) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) d2 += (z[k] - o[k]) * (z[k] - o[k]);
    if (d2 < 1e-12) return true;
  }
  return false;
}

}  // namespace

Point Optimizer::maximize_ei(const GaussianProcess& gp, const std::vector<Point>& taken) {
  const std::size_t d = space_.dim();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<double, Point>> samples;
  samples.reserve(options_.random_samples);
  for (std::size_t s = 0; s < std::max<std::size_t>(options_.random_samples, 1); ++s) {
    Point z(d);
    for (auto& v : z) v = u(rng_);
    samples.emplace_back(gp.expected_improvement(z), std::move(z));
  }
  std::stable_sort(samples.begin(), samples.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::size_t pick = 0;
  while (pick + 1 < samples.size() && near_any(samples[pick].second, taken)) ++pick;
  Point z = samples[pick].second;
  double best = samples[pick].first;

  // Coordinate-wise golden-section polish in a shrinking window.
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double width = 0.25;
  for (std::size_t step = 0; step < options_.polish_steps; ++step) {
    const std::size_t k = step % d;
    if (step > 0 && k == 0) width *= 0.5;
    double a = std::max(0.0, z[k] - width), b = std::min(1.0, z[k] + width);
    auto eval = [&](double t) {
      Point p = z;
      p[k] = t;
      return gp.expected_improvement(p);
    };
    double c = b - phi * (b - a), e = a + phi * (b - a);
    double fc = eval(c), fe = eval(e);
    for (int it = 0; it < 20; ++it) {
      if (fc >= fe) {
        b = e;
        e = c;
        fe = fc;
        c = b - phi * (b - a);
        fc = eval(c);
      } else {
        a = c;
        c = e;
        fc = fe;
        e = a + phi * (b - a);
        fe = eval(e);
      }
    }
    const double t = fc >= fe ? c : e;
    const double ft = std::max(fc, fe);
    if (ft > best) {
      Point cand = z;
      cand[k] = t;
      if (!near_any(cand, taken)) {
        z = std::move(cand);
        best = ft;
      }
    }
  }
  return z;
}

std::vector<Point> Optimizer::ask(std::size_t batch) {
  if (batch == 0) throw Error(ErrorCode::kInvalidConfig, "batch must be >= 1");
  if (observed_.size() < options_.initial_design) return random_batch(batch);

  const GaussianProcess& real = surrogate();
  const GpHyper hyper = real.hyper();
  const double lie = best()->y;

  std::vector<Point> z_train;
  std::vector<double> y_train;
  for (const auto& o : observed_) {
    z_train.push_back(space_.to_unit(o.x));
    y_train.push_back(o.y);
  }
  std::vector<Point> taken = z_train;
  std::vector<Point> out;
  GaussianProcess fantasy = real;
  for (std::size_t b = 0; b < batch; ++b) {
    Point z = maximize_ei(fantasy, taken);
    taken.push_back(z);
    out.push_back(space_.from_unit(z));
    if (b + 1 < batch) {
      z_train.push_back(z);
      y_train.push_back(lie);
      fantasy.fit(z_train, y_train, hyper);
    }
  }
  return out;
}

double SyntheticObjective::p_inlet(const ParameterSpace& space, const Point& x) const {
  auto z = space.to_unit(x);
  if (z.size() != weights.size()) throw Error(ErrorCode::kShapeMismatch, "objective dimension");
  double s = 0.0;
  for (std::size_t d = 0; d < z.size(); ++d)
    s += weights[d] * (z[d] - minimizer[d]) * (z[d] - minimizer[d]);
  return target + 2.0 * s;
}

std::string p_inlet_key(const std::string& member) { return "bo." + member + ".p_inlet"; }
std::string done_key(const std::string& member) { return "bo." + member + ".done"; }

void blackbox_simulation(Client& client, const Point& params, const std::string& member) {
  SyntheticObjective obj;
  const double p = obj.p_inlet(ParameterSpace::turbulence(), params);
  client.put_tensor(p_inlet_key(member), Tensor({1}, {p}));
  client.put_tensor(done_key(member), Tensor::flag());
}

std::vector<double> BoHistory::best_per_iteration() const {
  std::vector<double> out;
  for (const auto& e : evaluations) {
    if (out.size() <= e.iteration) out.resize(e.iteration + 1, 0.0);
    out[e.iteration] = e.best_so_far;
  }
  return out;
}

void BoHistory::write_csv(const std::filesystem::path& path, const ParameterSpace& space) const {
  std::ofstream out(path);
  out.precision(17);
  out << "iteration,eval_index";
  for (const auto& n : space.names) out << "," << n;
  out << ",p_inlet,objective,best_so_far\n";
  for (const auto& e : evaluations) {
    out << e.iteration << "," << e.eval_index;
    for (double v : e.x) out << "," << v;
    out << "," << e.p_inlet << "," << e.objective << "," << e.best_so_far << "\n";
  }
}

void BoHistory::write_summary(const std::filesystem::path& path,
                              const ParameterSpace& space) const {
  nlohmann::json j;
  j["evaluations"] = evaluations.size();
  j["best_objective"] = best_objective;
  j["best_p_inlet_error"] = std::sqrt(best_objective);
  for (std::size_t d = 0; d < space.dim() && d < best_x.size(); ++d)
    j["best_parameters"][space.names[d]] = best_x[d];
  j["best_so_far"] = best_per_iteration();
  std::ofstream(path) << j.dump(2) << "\n";
}

BoHistory run_bo(Client& client, const BoConfig& config, Evaluator& evaluator) {
  if (config.batch == 0) throw Error(ErrorCode::kInvalidConfig, "batch must be >= 1");
  auto space = ParameterSpace::turbulence();
  Optimizer opt(space, config.seed, config.acquisition);
  const Point x0 = default_turbulence_point();
  opt.allow_point(x0);
  SyntheticObjective obj;

  BoHistory history;
  double best = std::numeric_limits<double>::infinity();
  std::size_t next_index = 0;

  auto evaluate = [&](std::size_t iteration, const std::vector<Point>& points) {
    std::vector<Member> members;
    for (const auto& p : points) {
      Member m{"e" + std::to_string(next_index + members.size()), p};
      client.delete_key(Kind::kTensor, p_inlet_key(m.id));
      client.delete_key(Kind::kTensor, done_key(m.id));
      members.push_back(std::move(m));
    }
    evaluator.launch(members);
    auto abort = [&](const std::string& why) {
      std::string msg = "iteration " + std::to_string(iteration) + ": " + why;
      for (const auto& f : evaluator.wait()) msg += "; " + f;
      throw Error(ErrorCode::kWorkflow, msg);
    };
    std::vector<Observation> obs;
    for (const auto& m : members) {
      if (!client.poll_key(Kind::kTensor, done_key(m.id), config.poll).found)
        abort("member " + m.id + " never finished");
      auto p = client.get_tensor(p_inlet_key(m.id));
      if (!p) abort("member " + m.id + " wrote no p_inlet");
      obs.push_back({m.params, obj.objective(p->data()[0])});
      Evaluation e;
      e.iteration = iteration;
      e.eval_index = next_index++;
      e.x = m.params;
      e.p_inlet = p->data()[0];
      e.objective = obs.back().y;
      if (e.objective < best) {
        best = e.objective;
        history.best_x = e.x;
      }
      e.best_so_far = best;
      history.evaluations.push_back(std::move(e));
      client.delete_key(Kind::kTensor, p_inlet_key(m.id));
      client.delete_key(Kind::kTensor, done_key(m.id));
    }
    auto failures = evaluator.wait();
    if (!failures.empty()) abort("member failures");
    opt.tell(obs);
  };

  evaluate(0, {x0});
  for (std::size_t it = 1; it <= config.iterations; ++it) evaluate(it, opt.ask(config.batch));
  history.best_objective = best;
  return history;
}

}  // namespace simorch::bo
