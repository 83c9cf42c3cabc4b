#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "lqpg/error.hpp"
#include "lqpg/policy.hpp"
#include "lqpg/problems.hpp"
#include "oracles.hpp"

using lqpg::Matrix;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

lqpg::IterationTrace scalar_run(double sigma, int max_iters, double target_gap = 1e-10) {
  const auto prob = lqpg::make_scalar();
  lqpg::OptimizerConfig cfg;
  cfg.sigma = sigma;
  cfg.max_iters = max_iters;
  cfg.target_gap = target_gap;
  cfg.grad_tol = 0.0;
  return lqpg::policy_gradient_descent(prob, lqpg::FeedbackGain(prob, scalar(1.0)), cfg);
}

int count_true(const std::vector<bool>& v) {
  int n = 0;
  for (bool b : v) n += b;
  return n;
}

}  // namespace

TEST_CASE("scalar exact descent reaches the ARE root") {
  const auto trace = scalar_run(0.5, 200);
  const oracle::Scalar s;
  CHECK(trace.reason == lqpg::Termination::kGapTolerance);
  CHECK(static_cast<int>(trace.records.size()) <= 200);
  CHECK(trace.records.back().f_gap <= 1e-10);
  CHECK(trace.kstar(0, 0) == doctest::Approx(s.kstar()).epsilon(1e-10));
  CHECK(trace.fstar == doctest::Approx(s.f(s.kstar())).epsilon(1e-12));
  CHECK(trace.k_final(0, 0) == doctest::Approx(s.kstar()).epsilon(1e-5));

  // The first step is the closed-form gradient step from K = 1.
  CHECK(trace.records[0].f == doctest::Approx(s.f(1.0)).epsilon(1e-14));
  CHECK(trace.records[1].f == doctest::Approx(s.f(1.0 - 0.5 * s.grad(1.0))).epsilon(1e-13));

  for (std::size_t i = 1; i < trace.records.size(); ++i)
    CHECK(trace.records[i].f <= trace.records[i - 1].f);
}

TEST_CASE("zero step size leaves the gain unchanged") {
  const auto trace = scalar_run(0.0, 25, 0.0);
  CHECK(trace.records.size() == 25);
  CHECK(trace.reason == lqpg::Termination::kMaxIterations);
  for (const auto& r : trace.records) CHECK(r.f == trace.records[0].f);
  CHECK(trace.k_final(0, 0) == 1.0);
  const auto fit = lqpg::fit_linear_rate(trace);
  CHECK(fit.rate == doctest::Approx(1.0));
}

TEST_CASE("linear rate fit") {
  const auto fast = scalar_run(0.5, 60, 0.0);
  const auto slow = scalar_run(0.25, 60, 0.0);
  const auto ff = lqpg::fit_linear_rate(fast);
  const auto fs = lqpg::fit_linear_rate(slow);
  CHECK(ff.rate < 1.0);
  CHECK(ff.r_squared >= 0.95);
  CHECK(fs.rate > ff.rate);

  lqpg::IterationTrace short_trace;
  short_trace.records.resize(5);
  for (auto& r : short_trace.records) r.f_gap = 1.0;
  CHECK_THROWS_AS(lqpg::fit_linear_rate(short_trace), lqpg::ValidationError);

  // A synthetic geometric trace recovers its ratio exactly.
  lqpg::IterationTrace geo;
  for (int k = 0; k < 30; ++k) {
    lqpg::IterationRecord r;
    r.iter = k;
    r.f_gap = 3.0 * std::pow(0.9, k);
    geo.records.push_back(r);
  }
  const auto fg = lqpg::fit_linear_rate(geo);
  CHECK(fg.rate == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(fg.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("descent lemma") {
  const auto prob = lqpg::make_mass_spring(2);
  const auto k0 = lqpg::initial_stabilizing_gain(prob);
  const auto truth = lqpg::ground_truth(prob, k0);
  const Matrix g = lqpg::exact_gradient(prob, k0);
  std::vector<double> grid{0.0};
  for (double s = 1e-4; s < 2.0; s *= 1.05) grid.push_back(s);

  const auto exact = lqpg::verify_descent_lemma(prob, k0.k(), g, grid, truth.fstar);
  CHECK(exact.holds[0]);
  CHECK(exact.ratio[0] == doctest::Approx(1.0));
  CHECK(exact.holds[1]);
  CHECK(exact.mu > 0.0);

  // Overshooting by 40% is a θ = 0.4 robust estimate.
  const auto over = lqpg::verify_descent_lemma(prob, k0.k(), 1.4 * g, grid, truth.fstar);
  CHECK(count_true(exact.holds) > count_true(over.holds));
}

TEST_CASE("gain contraction") {
  const auto sc = lqpg::make_scalar();
  const auto trace = scalar_run(0.5, 200);
  const auto c = lqpg::verify_gain_contraction(sc, trace);
  CHECK(c.b_hat >= 1.0);
  CHECK(c.holds);
  CHECK(c.first_violation == -1);

  const auto ms = lqpg::make_mass_spring(4);
  lqpg::OptimizerConfig cfg;
  cfg.sigma = 0.03;
  cfg.max_iters = 400;
  const auto t4 = lqpg::policy_gradient_descent(ms, lqpg::initial_stabilizing_gain(ms), cfg);
  const auto c4 = lqpg::verify_gain_contraction(ms, t4, 2.0);
  CHECK(c4.holds);
  CHECK(c4.rate < 1.0);
}

TEST_CASE("step size error when the step leaves the stabilizing set") {
  const auto prob = lqpg::make_scalar();
  lqpg::OptimizerConfig cfg;
  cfg.sigma = 100.0;
  cfg.max_iters = 10;
  try {
    lqpg::policy_gradient_descent(prob, lqpg::FeedbackGain(prob, scalar(1.0)), cfg);
    FAIL("expected StepSizeError");
  } catch (const lqpg::StepSizeError& e) {
    CHECK(e.iteration() == 1);
    CHECK(e.suggested_sigma() == doctest::Approx(50.0));
  }
}

TEST_CASE("robust estimator converges and stays in the sublevel set") {
  const auto prob = lqpg::make_mass_spring(2);
  const auto k0 = lqpg::initial_stabilizing_gain(prob);
  lqpg::OptimizerConfig cfg;
  cfg.estimator = lqpg::EstimatorKind::kRobust;
  cfg.theta = 0.2;
  cfg.target_eps = 1e-5;
  cfg.max_iters = 5000;
  cfg.seed = 3;
  cfg.keep_iterates = true;
  cfg.sigma = 0.03;
  const auto trace = lqpg::policy_gradient_descent(prob, k0, cfg);
  CHECK(trace.reason == lqpg::Termination::kGainTolerance);
  CHECK(trace.records.back().gain_err <= 1e-5);
  CHECK(trace.robust_steps > 0);
  REQUIRE(trace.budget);
  CHECK(trace.budget->assembled_bound_holds);
  const double f0 = trace.records.front().f;
  for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
    CHECK(lqpg::FeedbackGain(prob, trace.iterates[i]).stabilizing());
    CHECK(trace.records[i].f <= f0 * (1 + 1e-12));
  }

  // Same seed, same trace.
  const auto again = lqpg::policy_gradient_descent(prob, k0, cfg);
  REQUIRE(again.records.size() == trace.records.size());
  CHECK(again.k_final == trace.k_final);
}

TEST_CASE("two-point estimator counts evaluations") {
  const auto prob = lqpg::make_scalar();
  lqpg::OptimizerConfig cfg;
  cfg.estimator = lqpg::EstimatorKind::kTwoPoint;
  cfg.sigma = 0.1;
  cfg.max_iters = 20;
  cfg.samples_per_step = 3;
  const auto trace = lqpg::policy_gradient_descent(prob, lqpg::FeedbackGain(prob, scalar(1.0)), cfg);
  CHECK(trace.records.size() == 20);
  // Cumulative, including the estimate taken at that iterate.
  for (std::size_t i = 0; i < trace.records.size(); ++i)
    CHECK(trace.records[i].evals == static_cast<long>(6 * (i + 1)));
}

TEST_CASE("optimizer input validation") {
  const auto prob = lqpg::make_scalar();
  lqpg::OptimizerConfig cfg;
  cfg.sigma = -1.0;
  CHECK_THROWS_AS(lqpg::policy_gradient_descent(prob, lqpg::FeedbackGain(prob, scalar(1.0)), cfg),
                  lqpg::ValidationError);
  cfg.sigma = 0.1;
  CHECK_THROWS_AS(lqpg::policy_gradient_descent(prob, lqpg::FeedbackGain(prob, scalar(-2.0)), cfg),
                  lqpg::StabilityError);
  CHECK(lqpg::parse_estimator("two-point") == lqpg::EstimatorKind::kTwoPoint);
  CHECK(lqpg::parse_estimator("two_point") == lqpg::EstimatorKind::kTwoPoint);
  CHECK_THROWS_AS(lqpg::parse_estimator("newton"), lqpg::ValidationError);
}

TEST_CASE("auto step size descends") {
  const auto prob = lqpg::make_mass_spring(3);
  const auto k0 = lqpg::initial_stabilizing_gain(prob);
  const double sigma = lqpg::auto_step_size(prob, k0);
  CHECK(sigma > 0.0);
  const Matrix k1 = k0.k() - sigma * lqpg::exact_gradient(prob, k0);
  CHECK(lqpg::objective(prob, k1) < lqpg::objective(prob, k0));
}
