#include "lqpg/policy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "lqpg/error.hpp"
#include "lqpg/rng.hpp"

namespace lqpg {

namespace {

constexpr std::uint64_t kPlStream = 0x504C;          // "PL"
constexpr std::uint64_t kTwoPointStreamBase = 1ULL << 32;

double gap_of(double f, double fstar) { return f - fstar; }

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kExact: return "exact";
    case EstimatorKind::kRobust: return "robust";
    case EstimatorKind::kTwoPoint: return "two-point";
  }
  return "exact";
}

EstimatorKind parse_estimator(std::string_view name) {
  if (name == "exact") return EstimatorKind::kExact;
  if (name == "robust") return EstimatorKind::kRobust;
  if (name == "two-point" || name == "two_point") return EstimatorKind::kTwoPoint;
  throw ValidationError("unknown estimator '" + std::string(name) +
                        "' (expected exact|robust|two-point)");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kGainTolerance: return "gain_tolerance";
    case Termination::kGapTolerance: return "gap_tolerance";
    case Termination::kGradientTolerance: return "gradient_tolerance";
    case Termination::kMaxIterations: return "max_iterations";
  }
  return "max_iterations";
}

GroundTruth ground_truth(const ProblemInstance& prob, const FeedbackGain& k0) {
  GroundTruth truth;
  try {
    const AreSolution are = newton_kleinman(prob, k0, 1e-11);
    truth.kstar = are.k;
    truth.are_residual = are.residual;
    truth.converged = true;
  } catch (const Error&) {
    // Fall back to a looser refinement; gaps then refer to the best known f.
    try {
      const AreSolution are = newton_kleinman(prob, k0, 1e-6);
      truth.kstar = are.k;
      truth.are_residual = are.residual;
    } catch (const Error&) {
      truth.kstar = k0.k();
      truth.are_residual = kInfiniteCost;
    }
  }
  truth.fstar = objective(prob, truth.kstar);
  return truth;
}

double auto_step_size(const ProblemInstance& prob, const FeedbackGain& k0) {
  const LqrEvaluation ev = evaluate(prob, k0);
  const double gnorm = ev.gradient.norm();
  if (gnorm == 0.0) return 1.0;
  const double h = 1e-6 * std::max(1.0, k0.k().norm());
  const FeedbackGain probe(prob, k0.k() - h * ev.gradient / gnorm);
  double sigma = 1.0;
  if (probe.stabilizing()) {
    const double lipschitz = (exact_gradient(prob, probe) - ev.gradient).norm() / h;
    if (lipschitz > 0.0) sigma = 1.0 / (2.0 * lipschitz);
  }
  for (int i = 0; i < 60; ++i, sigma *= 0.5) {
    const FeedbackGain next(prob, k0.k() - sigma * ev.gradient);
    if (next.stabilizing() && objective(prob, next) < ev.f) return sigma;
  }
  throw NumericalError("could not find a descending step size");
}

IterationTrace policy_gradient_descent(const ProblemInstance& prob,
                                       const FeedbackGain& k0,
                                       const OptimizerConfig& cfg) {
  if (!k0.stabilizing()) {
    throw StabilityError("initial gain must be stabilizing", k0.max_real_part());
  }
  return policy_gradient_descent(prob, k0, cfg, ground_truth(prob, k0));
}

IterationTrace policy_gradient_descent(const ProblemInstance& prob,
                                       const FeedbackGain& k0,
                                       const OptimizerConfig& cfg,
                                       const GroundTruth& truth) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  };

  if (!k0.stabilizing()) {
    throw StabilityError("initial gain must be stabilizing", k0.max_real_part());
  }
  if (cfg.max_iters < 1) throw ValidationError("max_iters must be >= 1");
  if (cfg.sigma && !(*cfg.sigma >= 0.0)) throw ValidationError("sigma must be >= 0");
  if (!(cfg.theta >= 0.0 && cfg.theta < 0.5)) {
    throw ValidationError("theta must lie in [0, 0.5)");
  }

  IterationTrace trace;
  trace.k0 = k0.k();
  trace.kstar = truth.kstar;
  trace.fstar = truth.fstar;
  trace.are_residual = truth.are_residual;
  trace.fstar_from_are = truth.converged;
  trace.sigma = cfg.sigma ? *cfg.sigma : auto_step_size(prob, k0);

  const double f0 = objective(prob, k0);
  double fstar = truth.fstar;

  double robust_eps = 0.0;
  if (cfg.estimator == EstimatorKind::kRobust) {
    if (!(cfg.theta > 0.0)) throw ValidationError("robust estimator needs theta > 0");
    robust_eps = cfg.robust_eps ? *cfg.robust_eps
                                : (cfg.target_eps > 0.0 ? cfg.target_eps : 1e-3);
    if (!(robust_eps > 0.0)) throw ValidationError("robust estimator needs eps > 0");
    const double a = f0;
    double mu = 0.0;
    if (cfg.pl_constant) {
      mu = *cfg.pl_constant;
    } else if (a > fstar) {
      mu = estimate_pl_constant(prob, truth.kstar, fstar, a, cfg.pl_samples,
                                sub_seed(cfg.seed, kPlStream));
    }
    const SublevelConstants consts = sublevel_constants(prob, a, mu);
    trace.budget = split_budget(cfg.c_safety * consts.c_lower, cfg.theta, robust_eps,
                                cfg.residual_rule);
  }

  Matrix k = k0.k();
  long evals = 0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    const FeedbackGain gain(prob, k);
    const LqrEvaluation ev = evaluate(prob, gain);
    if (!truth.converged) fstar = std::min(fstar, ev.f);

    IterationRecord rec;
    rec.iter = it;
    rec.f = ev.f;
    rec.f_gap = gap_of(ev.f, fstar);
    rec.gain_err = (k - truth.kstar).norm();

    const bool gain_done = cfg.target_eps > 0.0 && rec.gain_err <= cfg.target_eps;
    const bool gap_done = cfg.target_gap > 0.0 && rec.f_gap <= cfg.target_gap;
    if (gain_done || gap_done) {
      rec.grad_norm = ev.gradient.norm();
      rec.evals = evals;
      rec.wall_ms = elapsed_ms();
      trace.records.push_back(rec);
      trace.reason = gain_done ? Termination::kGainTolerance : Termination::kGapTolerance;
      trace.k_final = k;
      trace.f_final = ev.f;
      return trace;
    }

    Matrix g;
    switch (cfg.estimator) {
      case EstimatorKind::kExact:
        g = ev.gradient;
        break;
      case EstimatorKind::kRobust:
        if (cfg.polish_with_exact && rec.gain_err <= robust_eps) {
          g = ev.gradient;
          ++trace.polish_steps;
        } else {
          g = robust_gradient(prob, gain, *trace.budget,
                              sub_seed(cfg.seed, static_cast<std::uint64_t>(it) + 1))
                  .g;
          ++trace.robust_steps;
        }
        break;
      case EstimatorKind::kTwoPoint: {
        const GradientReport rep = two_point_estimator(
            prob, gain, cfg.smoothing_radius, cfg.samples_per_step,
            sub_seed(cfg.seed, kTwoPointStreamBase + static_cast<std::uint64_t>(it)),
            /*compute_exact=*/false);
        g = rep.g;
        evals += rep.evaluations;
        break;
      }
    }

    rec.grad_norm = g.norm();
    rec.evals = evals;
    rec.wall_ms = elapsed_ms();
    trace.records.push_back(rec);
    if (cfg.keep_iterates) {
      trace.iterates.push_back(k);
      trace.estimates.push_back(g);
    }

    if (ev.gradient.norm() <= cfg.grad_tol) {
      trace.reason = Termination::kGradientTolerance;
      trace.k_final = k;
      trace.f_final = ev.f;
      return trace;
    }

    Matrix next = k - trace.sigma * g;
    const FeedbackGain next_gain(prob, next);
    if (!next_gain.stabilizing()) {
      throw StepSizeError("iterate " + std::to_string(it + 1) +
                              " left the stabilizing set (max Re λ = " +
                              std::to_string(next_gain.max_real_part()) +
                              "); retry with sigma = " +
                              std::to_string(trace.sigma / 2),
                          it + 1, trace.sigma / 2);
    }
    if (trace.sigma > 0.0) {
      const double f_next = objective(prob, next_gain);
      if (f_next > f0 * (1.0 + 1e-12)) {
        throw StepSizeError("iterate " + std::to_string(it + 1) +
                                " left the sublevel set f <= f(K0) (f = " +
                                std::to_string(f_next) + "); retry with sigma = " +
                                std::to_string(trace.sigma / 2),
                            it + 1, trace.sigma / 2);
      }
    }
    k = std::move(next);
  }

  trace.reason = Termination::kMaxIterations;
  trace.k_final = k;
  trace.f_final = objective(prob, k);
  return trace;
}

LinearRateFit fit_linear_rate(const IterationTrace& trace) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const IterationRecord& rec : trace.records) {
    if (!(rec.f_gap > 0.0)) break;
    xs.push_back(static_cast<double>(rec.iter));
    ys.push_back(std::log(rec.f_gap));
  }
  if (xs.size() < 10) {
    throw ValidationError("linear-rate fit needs at least 10 positive gaps, got " +
                          std::to_string(xs.size()));
  }
  const double count = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= count;
  my /= count;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  LinearRateFit fit;
  fit.points = static_cast<int>(xs.size());
  const double slope = sxy / sxx;
  fit.rate = std::exp(slope);
  // A perfectly flat series is fit exactly by slope 0.
  fit.r_squared = syy <= 1e-300 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

DescentCheck verify_descent_lemma(const ProblemInstance& prob, const Matrix& k,
                                  const Matrix& g,
                                  const std::vector<double>& sigma_grid,
                                  double fstar) {
  const double gap0 = objective(prob, k) - fstar;
  DescentCheck out;
  out.sigma = sigma_grid;
  out.ratio.reserve(sigma_grid.size());
  double largest_passing = 0.0;
  double ratio_at_largest = 1.0;
  for (double s : sigma_grid) {
    const double f = objective(prob, k - s * g);
    const double ratio = gap0 > 0.0 ? (f - fstar) / gap0 : (f - fstar <= 0.0 ? 0.0 : kInfiniteCost);
    out.ratio.push_back(ratio);
    if (s > largest_passing && ratio < 1.0) {
      largest_passing = s;
      ratio_at_largest = ratio;
    }
  }
  out.mu = largest_passing > 0.0 ? largest_passing / (1.0 - ratio_at_largest)
                                 : kInfiniteCost;
  for (std::size_t i = 0; i < sigma_grid.size(); ++i) {
    const double bound = std::isfinite(out.mu) ? 1.0 - sigma_grid[i] / out.mu : 1.0;
    out.holds.push_back(out.ratio[i] <= bound * (1.0 + 1e-12) + 1e-15);
  }
  return out;
}

ContractionCheck verify_gain_contraction(const ProblemInstance& prob,
                                         const IterationTrace& trace, double b_cap) {
  ContractionCheck out;
  const FeedbackGain g0(prob, trace.k0);
  const Matrix x0 = state_covariance_X(prob, g0).x;
  out.b_hat = std::max(1.0, lambda_max_symmetric(prob.r()) * lambda_max_symmetric(x0)) *
              b_cap;

  const auto& recs = trace.records;
  double rate = 0.0;
  for (std::size_t i = 1; i < recs.size(); ++i) {
    if (recs[i - 1].f_gap > 0.0) {
      rate = std::max(rate, recs[i].f_gap / recs[i - 1].f_gap);
    }
  }
  out.rate = rate;
  if (recs.empty()) {
    out.holds = true;
    return out;
  }
  const double e0 = recs.front().gain_err * recs.front().gain_err;
  out.holds = true;
  for (const IterationRecord& rec : recs) {
    const double bound = out.b_hat * std::pow(rate, rec.iter) * e0;
    if (rec.gain_err * rec.gain_err > bound * (1.0 + 1e-12) + 1e-300) {
      out.holds = false;
      out.first_violation = rec.iter;
      break;
    }
  }
  return out;
}

}  // namespace lqpg
