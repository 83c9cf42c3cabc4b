// Acceptance suite: one PASS/FAIL line per primary criterion.
//
// Exit status is non-zero when any criterion fails, except those named with
// --expect-fail (they still print FAIL). --only runs a single criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lqpg/encoding.hpp"
#include "lqpg/error.hpp"
#include "lqpg/experiment.hpp"
#include "lqpg/gradient.hpp"
#include "lqpg/linalg.hpp"
#include "lqpg/lqr.hpp"
#include "lqpg/lyapunov.hpp"
#include "lqpg/policy.hpp"
#include "lqpg/problems.hpp"
#include "lqpg/rng.hpp"
#include "oracles.hpp"

using lqpg::Matrix;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::function<Outcome(const std::string&)> run;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome lyapunov_direct(const std::string&) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int n = 2 + i % 31;  // covers 2..32
    const Matrix a = lqpg::random_hurwitz_matrix(n, 1000 + i);
    const Matrix omega = lqpg::random_spd(n, 2000 + i);
    const auto sol = lqpg::solve_lyapunov_direct(a, omega);
    worst = std::max(worst, (a * sol.x + sol.x * a.transpose() + omega).norm());
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 5.0,
          "max residual " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome quadrature_agreement(const std::string&) {
  double worst_ratio = 0.0;
  std::vector<double> slopes;
  for (int i = 0; i < 20; ++i) {
    const int n = 2 + (i * 7) % 15;  // 2..16
    const Matrix a = lqpg::random_hurwitz_matrix(n, 3000 + i);
    const Matrix omega = lqpg::random_spd(n, 4000 + i);
    const Matrix xd = lqpg::solve_lyapunov_direct(a, omega).x;
    std::vector<double> le, ln;
    for (double eps : {1e-3, 1e-5}) {
      const auto sol = lqpg::solve_lyapunov_quadrature(a, omega, eps);
      worst_ratio = std::max(worst_ratio, (sol.x - xd).norm() / eps);
      le.push_back(std::log(eps));
      ln.push_back(std::log(static_cast<double>(*sol.nodes)));
    }
    slopes.push_back(oracle::slope(le, ln));
  }
  const auto [lo, hi] = std::minmax_element(slopes.begin(), slopes.end());
  const bool slope_ok = *lo >= -0.65 && *hi <= -0.35;
  return {worst_ratio <= 1.0 && slope_ok,
          "max err/eps " + fmt("%.3g", worst_ratio) + ", node slope in [" + fmt("%.3f", *lo) +
              ", " + fmt("%.3f", *hi) + "] (want -0.5 +/- 0.15)"};
}

Outcome truncation_bound(const std::string&) {
  int checked = 0, violations = 0;
  for (int i = 0; i < 20; ++i) {
    const int n = 2 + i % 7;
    Matrix a = lqpg::random_hurwitz_matrix(n, 5000 + i, -0.3);
    if (i % 2) a(0, n - 1) += 2.0;  // non-normal variants
    if (!lqpg::is_hurwitz(a).hurwitz) continue;
    const Matrix omega = lqpg::random_spd(n, 6000 + i);
    const Matrix xstar = oracle::lyapunov_eig(a, omega);
    const double xn = lqpg::spectral_norm(xstar);
    const double xl = lqpg::lambda_min_symmetric(xstar);
    const double kappa = xn / lqpg::lambda_min_symmetric(omega);
    for (double tau = 0.1; tau < 60; tau *= 1.4) {
      const double tail = lqpg::spectral_norm(xstar - lqpg::truncated_solution(a, omega, tau));
      const double bound = lqpg::truncation_tail_bound(kappa, lqpg::spectral_norm(omega), xn, xl, tau);
      ++checked;
      if (tail > bound * (1 + 1e-9) + 1e-13) ++violations;
    }
  }
  return {violations == 0 && checked > 0,
          std::to_string(checked) + " (instance, tau) pairs, " + std::to_string(violations) +
              " violations"};
}

Outcome gradient_correctness(const std::string&) {
  const std::vector<lqpg::ProblemInstance> probs = {lqpg::make_scalar(), lqpg::make_aircraft(),
                                                    lqpg::make_mass_spring(1),
                                                    lqpg::make_mass_spring(2),
                                                    lqpg::make_mass_spring(4)};
  lqpg::Rng rng(77);
  double worst = 0.0;
  int count = 0;
  for (const auto& prob : probs) {
    const auto k0 = lqpg::initial_stabilizing_gain(prob);
    const Matrix kstar = lqpg::newton_kleinman(prob, k0).k;
    int got = 0;
    while (got < 10) {
      const double scale = 0.3 * (1.0 + kstar.norm()) / std::sqrt(double(kstar.size()));
      const Matrix k = kstar + scale * rng.normal_matrix(prob.m(), prob.n());
      const lqpg::FeedbackGain gain(prob, k);
      if (!gain.stabilizing()) continue;
      const Matrix g = lqpg::exact_gradient(prob, gain);
      const Matrix fd = oracle::central_difference(
          [&](const Matrix& kk) { return lqpg::objective(prob, kk); }, k, 1e-5);
      worst = std::max(worst, (g - fd).norm() / g.norm());
      ++got;
      ++count;
    }
  }
  return {worst <= 1e-6 && count == 50,
          std::to_string(count) + " gains, max relative error " + fmt("%.3g", worst)};
}

Outcome optimal_gain(const std::string&) {
  std::vector<std::pair<std::string, lqpg::ProblemInstance>> probs = {
      {"scalar", lqpg::make_scalar()}, {"aircraft", lqpg::make_aircraft()}};
  for (int g = 1; g <= 4; ++g) probs.push_back({"mass_spring" + std::to_string(g), lqpg::make_mass_spring(g)});
  for (int s = 0; s < 3; ++s) probs.push_back({"random_hurwitz", lqpg::make_random_hurwitz(3 + 2 * s, s)});
  double worst_res = 0.0, worst_grad = 0.0;
  for (const auto& [name, prob] : probs) {
    const auto are = lqpg::newton_kleinman(prob, lqpg::initial_stabilizing_gain(prob));
    worst_res = std::max(worst_res, are.residual);
    const double gn = lqpg::exact_gradient(prob, lqpg::FeedbackGain(prob, are.k)).norm();
    worst_grad = std::max(worst_grad, gn / (1e-7 * (1 + are.k.norm())));
  }
  return {worst_res <= 1e-10 && worst_grad <= 1.0,
          std::to_string(probs.size()) + " problems, max ARE residual " + fmt("%.3g", worst_res) +
              ", max grad/(1e-7(1+|K*|)) " + fmt("%.3g", worst_grad)};
}

Outcome robust_contract(const std::string&) {
  const std::vector<lqpg::ProblemInstance> probs = {lqpg::make_scalar(), lqpg::make_aircraft(),
                                                    lqpg::make_mass_spring(2),
                                                    lqpg::make_mass_spring(4)};
  lqpg::Rng rng(91);
  int calls = 0, bad = 0;
  std::uint64_t seed = 0;
  for (double theta : {0.05, 0.1, 0.3}) {
    int done = 0;
    const int quota = theta == 0.3 ? 334 : 333;
    while (done < quota) {
      const auto& prob = probs[done % probs.size()];
      const auto k0 = lqpg::initial_stabilizing_gain(prob);
      const Matrix k = k0.k() + 0.1 * rng.normal_matrix(prob.m(), prob.n());
      const lqpg::FeedbackGain gain(prob, k);
      if (!gain.stabilizing()) continue;
      const double gnorm = lqpg::exact_gradient(prob, gain).norm();
      const auto budget = lqpg::split_budget(gnorm, theta, 1.0, lqpg::ResidualRule::kConservative);
      try {
        const auto rep = lqpg::robust_gradient(prob, gain, budget, seed++);
        const double e2 = rep.exact.squaredNorm();
        const double ip = (rep.g.array() * rep.exact.array()).sum();
        const bool ok = (rep.g - rep.exact).norm() <= theta * std::sqrt(e2) * (1 + 1e-12) &&
                        ip >= (1 - theta) * e2 * (1 - 1e-12) &&
                        rep.g.squaredNorm() <= (1 + theta) * (1 + theta) * e2 * (1 + 1e-12);
        bad += !ok;
      } catch (const lqpg::BudgetError&) {
        ++bad;
      }
      ++done;
      ++calls;
    }
  }
  return {bad == 0 && calls == 1000,
          std::to_string(calls) + " calls, " + std::to_string(bad) + " violations"};
}

Outcome linear_convergence(const std::string&) {
  const auto prob = lqpg::make_mass_spring(4);
  lqpg::OptimizerConfig cfg;
  cfg.sigma = 0.03;
  cfg.max_iters = 5000;
  cfg.target_gap = 1e-8;
  cfg.grad_tol = 0.0;
  cfg.keep_iterates = true;
  const auto trace = lqpg::policy_gradient_descent(prob, lqpg::initial_stabilizing_gain(prob), cfg);
  const auto fit = lqpg::fit_linear_rate(trace);
  const bool reached = trace.records.back().f_gap <= 1e-8;

  // Descent lemma at every iterate: μ is fitted from the step actually taken
  // and must also cover the shorter steps.
  int descent_fail = 0;
  const std::vector<double> grid = {cfg.sigma.value() / 8, cfg.sigma.value() / 4,
                                    cfg.sigma.value() / 2, cfg.sigma.value()};
  for (std::size_t i = 0; i + 1 < trace.iterates.size(); ++i) {
    if (trace.records[i].f_gap <= 1e-12) break;
    const lqpg::FeedbackGain gain(prob, trace.iterates[i]);
    const auto d = lqpg::verify_descent_lemma(prob, gain.k(), lqpg::exact_gradient(prob, gain),
                                              grid, trace.fstar);
    for (bool h : d.holds) descent_fail += !h;
  }
  const auto c = lqpg::verify_gain_contraction(prob, trace);
  const bool ok = reached && fit.r_squared >= 0.9 && fit.rate < 1.0 && descent_fail == 0 && c.holds;
  return {ok, std::to_string(trace.records.size()) + " iterations, final gap " +
                  fmt("%.3g", trace.records.back().f_gap) + ", rate " + fmt("%.5f", fit.rate) +
                  ", r2 " + fmt("%.4f", fit.r_squared) + ", descent failures " +
                  std::to_string(descent_fail) + ", contraction " + (c.holds ? "ok" : "violated")};
}

Outcome convergence_comparison(const std::string& out) {
  lqpg::BenchmarkSpec spec;
  spec.family = lqpg::Family::kMassSpring;
  spec.size = 4;
  spec.estimator = lqpg::EstimatorKind::kRobust;
  spec.out_dir = out + "/compare";
  lqpg::CompareOptions opt;  // threshold 1e-6, robust cap 2000, baseline cap 1e5
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = lqpg::compare(spec, opt);
  const double secs = seconds_since(t0);
  const auto& last = res.rows.back();
  const bool robust_ok = last.robust_iters && *last.robust_iters <= 2000;
  // A baseline that never reaches the threshold within its cap needs more
  // than cap iterations.
  const double base = last.baseline_iters ? *last.baseline_iters : opt.baseline_max_iters + 1.0;
  const double ratio = robust_ok ? base / *last.robust_iters : 0.0;
  std::string detail = "gap " + fmt("%.0e", last.threshold) + ": robust " +
                       (last.robust_iters ? std::to_string(*last.robust_iters) : "n/a") +
                       " iters, two-point " +
                       (last.baseline_iters ? std::to_string(*last.baseline_iters) : "> cap") +
                       " iters (x" + fmt("%.1f", ratio) + "), " + fmt("%.1f", secs) + " s";
  return {robust_ok && ratio >= 10.0 && secs <= 300.0, detail};
}

Outcome encoding_verification(const std::string&) {
  lqpg::EncodingVerifyOptions opts;
  opts.throw_on_failure = false;
  int failed = 0;
  std::vector<double> slopes;
  for (int n : {2, 4, 8}) {
    const Matrix a = lqpg::random_hurwitz_matrix(n, lqpg::sub_seed(0, 0));
    const Matrix omega = lqpg::random_spd(n, lqpg::sub_seed(0, 1));
    std::vector<double> le, lq;
    for (double eps : {1e-2, 1e-3, 1e-4}) {
      const auto rep = lqpg::verify_lyapunov_encoding(a, omega, eps, opts);
      failed += !rep.passed;
      le.push_back(std::log(eps));
      lq.push_back(std::log(static_cast<double>(rep.queries)));
    }
    slopes.push_back(oracle::slope(le, lq));
  }
  const auto [lo, hi] = std::minmax_element(slopes.begin(), slopes.end());
  const bool slope_ok = *lo >= -0.65 && *hi <= -0.35;
  return {failed == 0 && slope_ok,
          std::to_string(9 - failed) + "/9 verifications passed, query slope in [" +
              fmt("%.3f", *lo) + ", " + fmt("%.3f", *hi) + "] (want -0.5 +/- 0.15)"};
}

Outcome trace_emulation(const std::string&) {
  std::ostringstream detail;
  bool ok = true;
  for (double theta : {0.05, 0.2}) {
    int worst = 1000;
    for (int n : {2, 4, 8, 16}) {
      const Matrix m = lqpg::random_spd(n, 7000 + n);
      const lqpg::EmulatedEncoding enc{lqpg::spectral_norm(m), m, 0.0, 1};
      const double tr = m.trace();
      const auto est = lqpg::emulate_trace_estimate(enc, theta, 1000, 8000 + n);
      int inside = 0;
      for (double e : est) inside += std::abs(e - tr) <= theta * tr * (1 + 1e-12);
      worst = std::min(worst, inside);
    }
    // Objective evaluation on the scalar problem, one seed per trial.
    const auto prob = lqpg::make_scalar();
    const Matrix k = Matrix::Constant(1, 1, 1.0);
    const double f = lqpg::objective(prob, k);
    int inside = 0;
    for (std::uint64_t s = 0; s < 1000; ++s)
      inside += std::abs(lqpg::emulate_objective_evaluation(prob, k, theta, s) - f) <= theta * f;
    ok = ok && worst >= 800 && inside >= 800;
    detail << "theta " << theta << ": trace " << worst << "/1000, objective " << inside << "/1000; ";
  }
  return {ok, detail.str()};
}

Outcome scaling(const std::string& out) {
  lqpg::ScalingOptions opt;
  opt.out_dir = out + "/scaling";
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = lqpg::scaling_experiment({1, 2, 3, 4}, opt);
  const double secs = seconds_since(t0);
  std::ostringstream detail;
  bool ok = true;
  for (std::size_t i = 0; i + 1 < rows.size(); i += 2) {
    const auto& ours = rows[i].method == "two-point" ? rows[i + 1] : rows[i];
    const auto& base = rows[i].method == "two-point" ? rows[i] : rows[i + 1];
    ok = ok && ours.rel_f_gap <= base.rel_f_gap;
    detail << "g=" << ours.g << " " << fmt("%.2e", ours.rel_f_gap) << " vs "
           << fmt("%.2e", base.rel_f_gap) << "; ";
  }
  detail << fmt("%.1f", secs) << " s";
  return {ok && rows.size() == 8, detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::string out = "acceptance_out";
  std::vector<std::string> expect_fail;
  std::string only;
  app.add_option("--out", out, "directory for experiment artifacts");
  app.add_option("--expect-fail", expect_fail, "criteria whose FAIL does not change the exit status");
  app.add_option("--only", only, "run one criterion");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {"lyapunov-direct", lyapunov_direct},
      {"quadrature-agreement", quadrature_agreement},
      {"truncation-bound", truncation_bound},
      {"gradient-correctness", gradient_correctness},
      {"optimal-gain", optimal_gain},
      {"robust-gradient-contract", robust_contract},
      {"linear-convergence", linear_convergence},
      {"convergence-comparison", convergence_comparison},
      {"encoding-verification", encoding_verification},
      {"trace-emulation", trace_emulation},
      {"scaling", scaling},
  };
  const std::set<std::string> tolerated(expect_fail.begin(), expect_fail.end());

  int unexpected = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && c.id != only) continue;
    Outcome o;
    try {
      o = c.run(out);
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.id << ": " << o.detail;
    if (!o.pass && tolerated.count(c.id)) std::cout << " [expected]";
    std::cout << std::endl;
    if (!o.pass && !tolerated.count(c.id)) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
