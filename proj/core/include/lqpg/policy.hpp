#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "lqpg/gradient.hpp"
#include "lqpg/lqr.hpp"

namespace lqpg {

enum class EstimatorKind { kExact, kRobust, kTwoPoint };

std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator(std::string_view name);

struct OptimizerConfig {
  /// Fixed step size. Unset: 1/(2L̂) from a finite-difference Lipschitz
  /// estimate along the first gradient, halved until the first step descends.
  std::optional<double> sigma;
  double theta = 0.1;
  int max_iters = 1000;
  /// Stop once ‖K − K*‖_F ≤ target_eps (0 disables).
  double target_eps = 0.0;
  /// Stop once f(K) − f(K*) ≤ target_gap (0 disables).
  double target_gap = 0.0;
  double grad_tol = 1e-10;
  EstimatorKind estimator = EstimatorKind::kExact;
  std::uint64_t seed = 0;

  // Robust estimator.
  ResidualRule residual_rule = ResidualRule::kConservative;
  /// Distance-to-optimum scale ε of the robust budget; defaults to
  /// target_eps, or 1e-3 when that is unset.
  std::optional<double> robust_eps;
  /// Overrides the sampled PL constant.
  std::optional<double> pl_constant;
  int pl_samples = 64;
  double c_safety = 0.5;
  /// Inside ‖K − K*‖ ≤ ε the robust lower bound on ‖∇f‖ no longer applies;
  /// switch to exact gradients there.
  bool polish_with_exact = true;

  // Two-point estimator.
  double smoothing_radius = 1e-4;
  int samples_per_step = 1;

  /// Keep every iterate K_k and estimate G_k in the trace.
  bool keep_iterates = false;
};

struct IterationRecord {
  int iter = 0;
  double f = 0.0;
  double f_gap = 0.0;
  double grad_norm = 0.0;  // ‖G_k‖_F of the estimate used at this iterate
  double gain_err = 0.0;   // ‖K_k − K*‖_F
  long evals = 0;          // cumulative objective evaluations
  double wall_ms = 0.0;    // cumulative
};

enum class Termination { kGainTolerance, kGapTolerance, kGradientTolerance, kMaxIterations };

std::string_view to_string(Termination t);

struct IterationTrace {
  std::vector<IterationRecord> records;
  Matrix k0;
  Matrix k_final;
  double f_final = 0.0;
  Termination reason = Termination::kMaxIterations;
  double sigma = 0.0;

  // Ground truth used for gaps and gain errors.
  Matrix kstar;
  double fstar = 0.0;
  double are_residual = 0.0;
  bool fstar_from_are = true;

  std::optional<ErrorBudget> budget;
  int robust_steps = 0;
  int polish_steps = 0;

  std::vector<Matrix> iterates;   // K_k (keep_iterates only)
  std::vector<Matrix> estimates;  // G_k (keep_iterates only)
};

struct GroundTruth {
  Matrix kstar;
  double fstar = 0.0;
  double are_residual = 0.0;
  bool converged = false;
};

/// K* and f(K*) from Newton–Kleinman (tol 1e-11) started at k0. When the
/// refinement fails, converged is false and kstar/fstar are the best
/// available iterate.
GroundTruth ground_truth(const ProblemInstance& prob, const FeedbackGain& k0);

/// Iterates K ← K − σ G_k. Throws StepSizeError when an iterate leaves the
/// stabilizing set or the sublevel set {f ≤ f(K0)}.
IterationTrace policy_gradient_descent(const ProblemInstance& prob,
                                       const FeedbackGain& k0,
                                       const OptimizerConfig& cfg);

/// Overload with precomputed ground truth.
IterationTrace policy_gradient_descent(const ProblemInstance& prob,
                                       const FeedbackGain& k0,
                                       const OptimizerConfig& cfg,
                                       const GroundTruth& truth);

/// Step size 1/(2L̂) with backtracking, see OptimizerConfig::sigma.
double auto_step_size(const ProblemInstance& prob, const FeedbackGain& k0);

struct LinearRateFit {
  double rate = 1.0;       // exp(slope of log f-gap vs k)
  double r_squared = 1.0;
  int points = 0;
};

/// Least-squares fit of log(f-gap) against k, over the prefix of records
/// with positive gaps. Needs at least 10 such records.
LinearRateFit fit_linear_rate(const IterationTrace& trace);

struct DescentCheck {
  std::vector<double> sigma;
  std::vector<double> ratio;  // gap(K − σG)/gap(K)
  std::vector<bool> holds;
  double mu = 0.0;  // fitted from the largest σ with ratio < 1
};

/// Checks f(K − σG) − f* ≤ (1 − σ/μ)(f(K) − f*) over sigma_grid. μ is the
/// smallest value making the inequality hold at the largest σ of the grid
/// where the step still decreases the gap.
DescentCheck verify_descent_lemma(const ProblemInstance& prob, const Matrix& k,
                                  const Matrix& g,
                                  const std::vector<double>& sigma_grid,
                                  double fstar);

struct ContractionCheck {
  bool holds = false;
  double b_hat = 0.0;  // λ_max(R)·λ_max(X(K0)) times b_cap
  double rate = 0.0;   // worst per-step gap ratio
  int first_violation = -1;
};

/// ‖K_k − K*‖² ≤ b̂·rate^k·‖K0 − K*‖² at every recorded k.
ContractionCheck verify_gain_contraction(const ProblemInstance& prob,
                                         const IterationTrace& trace,
                                         double b_cap = 2.0);

}  // namespace lqpg
