// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <thread>

#include "doctest.h"
#include "simorch/bayesopt.hpp"
#include "simorch/error.hpp"
#include "simorch/store.hpp"

using namespace simorch;
using namespace simorch::bo;

namespace {

class ThreadEvaluator : public Evaluator {
 public:
  explicit ThreadEvaluator(Store& store) : store_(store) {}
  void launch(const std::vector<Member>& batch) override {
    for (const auto& m : batch) {
      threads_.emplace_back([this, m] {
        auto c = Client::in_process(store_);
        blackbox_simulation(c, m.params, m.id);
      });
    }
  }
  std::vector<std::string> wait() override {
    for (auto& t : threads_) t.join();
    threads_.clear();
    return {};
  }

 private:
  Store& store_;
  std::vector<std::thread> threads_;
};

GaussianProcess fitted_gp(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> z;
  std::vector<double> y;
  for (std::size_t i = 0; i < n; ++i) {
    Point p{u(rng), u(rng)};
    y.push_back(std::sin(3.0 * p[0]) + p[1] * p[1]);
    z.push_back(std::move(p));
  }
  GaussianProcess gp;
  gp.fit(z, y);
  return gp;
}

}  // namespace

TEST_CASE("expected improvement closed forms") {
  CHECK(expected_improvement(0.0, 1.0, 0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
  CHECK(std::fabs(expected_improvement(1.5, 1.0, 1.5) - 0.39894) <= 1e-5);
  CHECK(expected_improvement(1.0, 0.0, 3.0) == 2.0);
  CHECK(expected_improvement(3.0, 0.0, 1.0) == 0.0);
  CHECK(expected_improvement(50.0, 1.0, 0.0) >= 0.0);
}

TEST_CASE("posterior interpolates the training targets") {
  GaussianProcess gp;
  std::vector<Point> z{{0.2, 0.3}, {0.7, 0.9}};
  std::vector<double> y{3.0, -1.0};
  gp.fit(z, y);
  for (std::size_t i = 0; i < 2; ++i) {
    auto [mu, sigma] = gp.predict_standardized(z[i]);
    CHECK(std::fabs(mu - gp.standardize(y[i])) <= 1e-4);
    CHECK(sigma >= 0.0);
  }
  std::mt19937_64 rng(1);
  auto big = fitted_gp(rng, 25);
  CHECK(big.size() == 25);
}

TEST_CASE("duplicate inputs are regularized") {
  GaussianProcess gp;
  CHECK_NOTHROW(gp.fit({{0.5}, {0.5}, {0.1}}, {1.0, 1.0, 2.0}));
  auto [mu, sigma] = gp.predict_standardized({0.5});
  CHECK(std::isfinite(mu));
  CHECK(std::isfinite(sigma));
}

TEST_CASE("selected hyperparameters maximize the grid likelihood") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    auto gp = fitted_gp(rng, 12 + trial * 4);
    const double chosen = gp.log_marginal_likelihood(gp.hyper());
    for (double l : GaussianProcess::lengthscale_grid())
      for (double s : GaussianProcess::variance_grid())
        CHECK(chosen >= gp.log_marginal_likelihood({l, s}));
  }
}

TEST_CASE("EI is nonnegative everywhere and vanishes at a non-best training point") {
  std::mt19937_64 rng(11);
  auto gp = fitted_gp(rng, 20);
  std::uniform_real_distribution<double> u(-0.2, 1.2);
  for (int i = 0; i < 1000; ++i) CHECK(gp.expected_improvement({u(rng), u(rng)}) >= 0.0);

  std::vector<Point> z{{0.1, 0.1}, {0.5, 0.5}, {0.9, 0.2}, {0.3, 0.8}};
  std::vector<double> y{1.0, 0.0, 2.0, 1.5};
  GaussianProcess g;
  g.fit(z, y);
  CHECK(g.expected_improvement(z[2]) <= 1e-6);
  CHECK(g.expected_improvement(z[0]) <= 1e-6);
}

TEST_CASE("EI argmax is invariant to affine target rescaling") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> z;
  std::vector<double> y, y2;
  for (int i = 0; i < 10; ++i) {
    z.push_back({u(rng), u(rng)});
    y.push_back(std::cos(4.0 * z.back()[0]) + z.back()[1]);
    y2.push_back(7.5 * y.back() - 3.0);
  }
  GaussianProcess a, b;
  a.fit(z, y);
  b.fit(z, y2);
  std::size_t arg_a = 0, arg_b = 0;
  double best_a = -1.0, best_b = -1.0;
  for (int i = 0; i < 500; ++i) {
    Point p{u(rng), u(rng)};
    double ea = a.expected_improvement(p), eb = b.expected_improvement(p);
    if (ea > best_a) best_a = ea, arg_a = i;
    if (eb > best_b) best_b = eb, arg_b = i;
  }
  CHECK(arg_a == arg_b);
}

TEST_CASE("asks stay in the box") {
  auto space = ParameterSpace::turbulence();
  Optimizer opt(space, 42);
  auto first = opt.ask(5);
  REQUIRE(first.size() == 5);
  for (const auto& p : first) CHECK(space.contains(p));
  SyntheticObjective obj;
  for (int round = 0; round < 3; ++round) {
    std::vector<Observation> obs;
    for (const auto& p : opt.ask(5)) {
      CHECK(space.contains(p));
      obs.push_back({p, obj.objective(obj.p_inlet(space, p))});
    }
    opt.tell(obs);
  }
}

TEST_CASE("tell rejects points outside the box unless registered") {
  auto space = ParameterSpace::turbulence();
  Optimizer opt(space, 1);
  auto x0 = default_turbulence_point();
  CHECK_FALSE(space.contains(x0));
  try {
    opt.tell({{x0, 1.0}});
    FAIL("expected OUT_OF_BOUNDS");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOutOfBounds);
  }
  opt.allow_point(x0);
  CHECK_NOTHROW(opt.tell({{x0, 1.0}}));
}

TEST_CASE("batch asks concentrate near a sharp minimum") {
  ParameterSpace line{{"x"}, {0.0}, {1.0}};
  Optimizer opt(line, 5);
  auto f = [](double x) { return 1.0 - std::exp(-std::pow((x - 0.3) / 0.05, 2)); };
  std::vector<Observation> obs;
  for (double x : {0.0, 0.1, 0.28, 0.5, 0.7, 0.9, 1.0}) obs.push_back({{x}, f(x)});
  opt.tell(obs);
  auto pts = opt.ask(5);
  int near = 0;
  for (const auto& p : pts) near += std::fabs(p[0] - 0.3) <= 0.1;
  CHECK(near >= 1);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) CHECK(pts[i] != pts[j]);
}

TEST_CASE("single ask equals the first point of a constant-liar batch") {
  auto space = ParameterSpace::turbulence();
  SyntheticObjective obj;
  auto prime = [&](Optimizer& o) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Observation> obs;
    for (int i = 0; i < 8; ++i) {
      auto p = space.from_unit({u(rng), u(rng), u(rng), u(rng)});
      obs.push_back({p, obj.objective(obj.p_inlet(space, p))});
    }
    o.tell(obs);
  };
  Optimizer a(space, 77), b(space, 77);
  prime(a);
  prime(b);
  auto one = a.ask(1);
  auto five = b.ask(5);
  CHECK(one[0] == five[0]);

  // Sequential asks with tells between them keep working.
  for (int k = 0; k < 5; ++k) {
    auto p = a.ask(1);
    a.tell({{p[0], obj.objective(obj.p_inlet(space, p[0]))}});
  }
  CHECK(a.observations().size() == 13);
}

TEST_CASE("synthetic blackbox values") {
  auto space = ParameterSpace::turbulence();
  SyntheticObjective obj;
  auto at_min = space.from_unit(obj.minimizer);
  CHECK(obj.p_inlet(space, at_min) == doctest::Approx(1.9).epsilon(1e-14));
  CHECK(obj.objective(obj.p_inlet(space, at_min)) <= 1e-28);
  // Standard coefficients, evaluated by hand.
  const double p0 = obj.p_inlet(space, default_turbulence_point());
  CHECK(p0 == doctest::Approx(2.899824263038548).epsilon(1e-14));
  CHECK(obj.objective(p0) == doctest::Approx(0.9996485569605759).epsilon(1e-14));
  const double corner = obj.objective(obj.p_inlet(space, space.upper));
  CHECK(std::isfinite(corner));
  CHECK(corner > 0.0);
}

TEST_CASE("run_bo evaluates 51 points deterministically") {
  auto run = [](std::uint64_t seed) {
    Store store;
    auto c = Client::in_process(store);
    ThreadEvaluator ev(store);
    BoConfig cfg;
    cfg.seed = seed;
    cfg.poll = {std::chrono::milliseconds(1), 5000};
    auto h = run_bo(c, cfg, ev);
    CHECK_FALSE(store.exists(Kind::kTensor, done_key("e0")));
    return h;
  };
  auto a = run(3);
  REQUIRE(a.evaluations.size() == 51);
  CHECK(a.evaluations[0].x == default_turbulence_point());
  CHECK(a.evaluations[0].objective == doctest::Approx(0.9996485569605759).epsilon(1e-14));
  auto best = a.best_per_iteration();
  CHECK(best.size() == 11);
  for (std::size_t i = 1; i < best.size(); ++i) CHECK(best[i] <= best[i - 1]);
  auto b = run(3);
  REQUIRE(b.evaluations.size() == 51);
  for (std::size_t i = 0; i < 51; ++i) {
    CHECK(a.evaluations[i].x == b.evaluations[i].x);
    CHECK(a.evaluations[i].objective == b.evaluations[i].objective);
  }
}
