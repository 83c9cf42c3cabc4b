#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lqpg/lqr.hpp"

namespace lqpg {

/// How the unit-vector tomography tolerance ε_r is chosen.
enum class ResidualRule {
  kPaper,         // ε_r = 1/(3 + cθ)
  kConservative,  // ε_r = θ/(3(1 + θ)); the assembled bound then holds
};

/// Error split for the θ-robust estimate: ε_b (block-encoded gradient),
/// ε_a (norm estimate), ε_r (unit-vector tomography).
struct ErrorBudget {
  double theta = 0.0;
  double eps = 0.0;
  double c = 0.0;
  double eps_b = 0.0;
  double eps_a = 0.0;
  double eps_r = 0.0;
  ResidualRule rule = ResidualRule::kPaper;
  /// Whether ε_a + (‖∇f‖ + cθε/3)ε_r + ε_b ≤ θ‖∇f‖ holds at ‖∇f‖ = cε.
  bool assembled_bound_holds = false;
  std::vector<std::string> warnings;
};

ErrorBudget split_budget(double c, double theta, double eps,
                         ResidualRule rule = ResidualRule::kPaper);
ErrorBudget split_budget(const SublevelConstants& consts, double theta, double eps,
                         ResidualRule rule = ResidualRule::kPaper);

/// Column-stacked G / ‖G‖_F together with ‖G‖_F and the shape.
struct VectorizedGradient {
  Vector unit;
  double norm = 0.0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

VectorizedGradient vectorize_gradient(const Matrix& g);
Matrix devectorize(const VectorizedGradient& v);

/// Returns 𝒢 with ‖𝒢 − v‖ ≤ eps_r: a seeded uniform direction scaled by a
/// magnitude drawn uniform in [0, eps_r].
Vector emulate_entry_tomography(const Vector& v, double eps_r, std::uint64_t seed);

/// Returns a ≥ 0 with |a − true_norm| ≤ eps_a.
double emulate_norm_estimation(double true_norm, double eps_a, std::uint64_t seed);

struct GradientReport {
  Matrix g;
  Matrix exact;
  double deviation_ratio = 0.0;  // ‖G − ∇f‖_F / ‖∇f‖_F
  ErrorBudget budget;
  long evaluations = 0;  // objective evaluations consumed

  // Intermediate quantities of the robust pipeline.
  Matrix block_encoded;  // ∇f plus the ε_b-bounded block-encoding error
  Vector tomography;     // 𝒢
  double norm_estimate = 0.0;
};

/// Emulated θ-robust gradient: exact ∇f, an ε_b-bounded perturbation for
/// the block-encoding stage, then tomography and norm estimation on its
/// vectorization; G = a_est·𝒢. Throws BudgetError (carrying the ratio) if
/// the assembled deviation exceeds θ.
GradientReport robust_gradient(const ProblemInstance& prob, const FeedbackGain& gain,
                               const ErrorBudget& budget, std::uint64_t seed);

/// Two-point smoothing estimator over N directions on the unit Frobenius
/// sphere: Ĝ = (mn/(2rN)) Σ [f(K + rU) − f(K − rU)] U. Each sample draws
/// from its own counter-derived stream and is redrawn up to 10 times when
/// K ± rU is not stabilizing.
GradientReport two_point_estimator(const ProblemInstance& prob,
                                   const FeedbackGain& gain, double radius,
                                   int samples, std::uint64_t seed,
                                   bool compute_exact = true);

}  // namespace lqpg
