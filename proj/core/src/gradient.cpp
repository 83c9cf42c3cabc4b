#include "lqpg/gradient.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lqpg/error.hpp"
#include "lqpg/rng.hpp"

namespace lqpg {

namespace {

// Streams for the three noise stages of one robust call.
constexpr std::uint64_t kBlockStream = 0;
constexpr std::uint64_t kTomographyStream = 1;
constexpr std::uint64_t kNormStream = 2;

Vector bounded_perturbation(Eigen::Index size, double bound, std::uint64_t seed) {
  if (bound == 0.0) return Vector::Zero(size);
  Rng rng(seed);
  const Matrix dir = rng.unit_sphere(size, 1);
  const double magnitude = rng.uniform(0.0, bound);
  return magnitude * dir.col(0);
}

}  // namespace

ErrorBudget split_budget(double c, double theta, double eps, ResidualRule rule) {
  if (!(theta > 0.0 && theta < 0.5)) {
    throw ValidationError("theta must lie in (0, 0.5)");
  }
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  if (!(c >= 0.0)) throw ValidationError("c must be non-negative");

  ErrorBudget b;
  b.theta = theta;
  b.eps = eps;
  b.c = c;
  b.rule = rule;
  b.eps_b = c * theta * eps / 3.0;
  b.eps_a = c * theta * eps / 3.0;
  b.eps_r = rule == ResidualRule::kPaper ? 1.0 / (3.0 + c * theta)
                                         : theta / (3.0 * (1.0 + theta));

  const double grad_floor = c * eps;
  const double assembled =
      b.eps_a + (grad_floor + c * theta * eps / 3.0) * b.eps_r + b.eps_b;
  b.assembled_bound_holds = assembled <= theta * grad_floor * (1.0 + 1e-12);
  if (!b.assembled_bound_holds) {
    b.warnings.push_back("assembled deviation " + std::to_string(assembled) +
                         " exceeds θ‖∇f‖ = " + std::to_string(theta * grad_floor) +
                         " at ‖∇f‖ = cε; robust calls may raise budget errors");
  }
  return b;
}

ErrorBudget split_budget(const SublevelConstants& consts, double theta, double eps,
                         ResidualRule rule) {
  return split_budget(consts.c_lower, theta, eps, rule);
}

VectorizedGradient vectorize_gradient(const Matrix& g) {
  require_finite(g, "gradient");
  const double norm = g.norm();
  if (norm == 0.0) {
    throw ValidationError("cannot vectorize a zero gradient (degenerate input)");
  }
  VectorizedGradient v;
  v.unit = vec(g) / norm;
  v.norm = norm;
  v.rows = g.rows();
  v.cols = g.cols();
  return v;
}

Matrix devectorize(const VectorizedGradient& v) {
  return unvec(v.unit, v.rows, v.cols) * v.norm;
}

Vector emulate_entry_tomography(const Vector& v, double eps_r, std::uint64_t seed) {
  if (std::abs(v.norm() - 1.0) > 1e-12) {
    throw ValidationError("entry tomography expects a unit vector");
  }
  if (!(eps_r >= 0.0)) throw ValidationError("eps_r must be non-negative");
  return v + bounded_perturbation(v.size(), eps_r, seed);
}

double emulate_norm_estimation(double true_norm, double eps_a, std::uint64_t seed) {
  if (!(true_norm >= 0.0)) throw ValidationError("norm must be non-negative");
  if (!(eps_a >= 0.0)) throw ValidationError("eps_a must be non-negative");
  if (eps_a == 0.0) return true_norm;
  Rng rng(seed);
  // Clamping at zero only moves the estimate closer to true_norm.
  return std::max(0.0, true_norm + rng.uniform(-eps_a, eps_a));
}

GradientReport robust_gradient(const ProblemInstance& prob, const FeedbackGain& gain,
                               const ErrorBudget& budget, std::uint64_t seed) {
  GradientReport rep;
  rep.budget = budget;
  rep.exact = exact_gradient(prob, gain);
  const double exact_norm = rep.exact.norm();

  rep.block_encoded =
      rep.exact + unvec(bounded_perturbation(rep.exact.size(), budget.eps_b,
                                             sub_seed(seed, kBlockStream)),
                        rep.exact.rows(), rep.exact.cols());

  const VectorizedGradient v = vectorize_gradient(rep.block_encoded);
  rep.tomography =
      emulate_entry_tomography(v.unit, budget.eps_r, sub_seed(seed, kTomographyStream));
  rep.norm_estimate =
      emulate_norm_estimation(v.norm, budget.eps_a, sub_seed(seed, kNormStream));
  rep.g = rep.norm_estimate * unvec(rep.tomography, v.rows, v.cols);

  rep.deviation_ratio = (rep.g - rep.exact).norm() / exact_norm;
  if (!(rep.deviation_ratio <= budget.theta)) {
    throw BudgetError("robust gradient deviation " +
                          std::to_string(rep.deviation_ratio) + " exceeds θ = " +
                          std::to_string(budget.theta) + " (‖∇f‖ = " +
                          std::to_string(exact_norm) + ")",
                      rep.deviation_ratio);
  }
  // Inner-product and norm consequences of the θ-robust property.
  const double grad_sq = exact_norm * exact_norm;
  const double slack = 1e-12 * grad_sq;
  const double inner = (rep.g.array() * rep.exact.array()).sum();
  if (inner < (1.0 - budget.theta) * grad_sq - slack ||
      rep.g.squaredNorm() > (1.0 + budget.theta) * (1.0 + budget.theta) * grad_sq + slack) {
    throw BudgetError("robust gradient violates the θ-robust inner-product/norm bounds",
                      rep.deviation_ratio);
  }
  return rep;
}

GradientReport two_point_estimator(const ProblemInstance& prob,
                                   const FeedbackGain& gain, double radius,
                                   int samples, std::uint64_t seed,
                                   bool compute_exact) {
  if (!gain.stabilizing()) {
    throw StabilityError("two-point estimator needs a stabilizing gain",
                         gain.max_real_part());
  }
  if (!(radius > 0.0)) throw ValidationError("smoothing radius must be positive");
  if (samples < 1) throw ValidationError("two-point estimator needs N >= 1");

  constexpr int kMaxRedraws = 10;
  const Eigen::Index m = prob.m();
  const Eigen::Index n = prob.n();
  GradientReport rep;
  rep.g = Matrix::Zero(m, n);
  for (int i = 0; i < samples; ++i) {
    Rng rng(sub_seed(seed, static_cast<std::uint64_t>(i)));
    bool accepted = false;
    for (int attempt = 0; attempt <= kMaxRedraws && !accepted; ++attempt) {
      const Matrix u = rng.unit_sphere(m, n);
      const FeedbackGain plus(prob, gain.k() + radius * u);
      const FeedbackGain minus(prob, gain.k() - radius * u);
      if (!plus.stabilizing() || !minus.stabilizing()) continue;
      const double diff = objective(prob, plus) - objective(prob, minus);
      rep.g += diff * u;
      rep.evaluations += 2;
      accepted = true;
    }
    if (!accepted) {
      throw NumericalError("two-point perturbations K ± rU keep leaving the "
                           "stabilizing set at r = " + std::to_string(radius) +
                           "; use a smaller radius");
    }
  }
  rep.g *= static_cast<double>(m * n) / (2.0 * radius * samples);
  if (compute_exact) {
    rep.exact = exact_gradient(prob, gain);
    const double en = rep.exact.norm();
    rep.deviation_ratio = en > 0.0 ? (rep.g - rep.exact).norm() / en : 0.0;
  }
  return rep;
}

}  // namespace lqpg
