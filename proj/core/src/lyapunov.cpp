#include "lqpg/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "lqpg/error.hpp"

namespace lqpg {

namespace {

void require_lyapunov_operands(const Matrix& a, const Matrix& omega) {
  require_square(a, "Lyapunov A");
  require_square(omega, "Lyapunov Ω");
  if (a.rows() != omega.rows()) {
    throw DimensionError("Lyapunov A and Ω differ in size");
  }
  require_finite(a, "Lyapunov A");
  require_finite(omega, "Lyapunov Ω");
  require_symmetric(omega, "Lyapunov Ω");
}

void require_stable(const Matrix& a) {
  const HurwitzResult hw = is_hurwitz(a);
  if (!hw.hurwitz) {
    throw StabilityError(
        "Lyapunov solution is unique only for Hurwitz A (max Re λ = " +
            std::to_string(hw.max_real_part) + ")",
        hw.max_real_part);
  }
}

// Binary-counter pairwise summation: the association order depends only on
// the number of terms, so results are bit-reproducible.
class PairwiseSum {
 public:
  void add(Matrix term) {
    int level = 0;
    while (!stack_.empty() && stack_.back().first == level) {
      term += stack_.back().second;
      stack_.pop_back();
      ++level;
    }
    stack_.emplace_back(level, std::move(term));
  }

  Matrix total(Eigen::Index n) const {
    Matrix out = Matrix::Zero(n, n);
    for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) out += it->second;
    return out;
  }

 private:
  std::vector<std::pair<int, Matrix>> stack_;
};

constexpr long kReanchorEvery = 64;

}  // namespace

double lyapunov_residual(const Matrix& a, const Matrix& x, const Matrix& omega) {
  return (a * x + x * a.transpose() + omega).norm();
}

LyapunovSolution solve_lyapunov_direct(const Matrix& a, const Matrix& omega) {
  require_lyapunov_operands(a, omega);
  require_stable(a);

  const Eigen::Index n = a.rows();
  const Matrix l = kron_vectorize(a);
  const Eigen::PartialPivLU<Matrix> lu(l);
  const Vector rhs = -vec(omega);
  Vector x = lu.solve(rhs);
  x += lu.solve(rhs - l * x);

  LyapunovSolution sol;
  sol.x = symmetrize(unvec(x, n, n));
  sol.residual_norm = lyapunov_residual(a, sol.x, omega);
  sol.method = LyapunovMethod::kDirect;

  const double scale = spectral_norm(a) * spectral_norm(sol.x) + spectral_norm(omega);
  if (sol.residual_norm > 1e-10 * std::max(scale, 1e-300)) {
    throw NumericalError("direct Lyapunov solve is too ill-conditioned: residual " +
                         std::to_string(sol.residual_norm));
  }
  return sol;
}

QuadraturePlan make_trapezoid_plan(double tau, long nodes) {
  if (!(tau > 0.0) || nodes < 2) {
    throw ValidationError("trapezoid plan needs tau > 0 and at least 2 nodes");
  }
  QuadraturePlan plan;
  plan.tau = tau;
  plan.nodes = nodes;
  plan.weights.resize(nodes + 1);
  plan.times.resize(nodes + 1);
  const double h = tau / static_cast<double>(nodes);
  for (long k = 0; k <= nodes; ++k) {
    plan.times[k] = static_cast<double>(k) * h;
    plan.weights[k] = (k == 0 || k == nodes) ? 0.5 * h : h;
  }
  return plan;
}

double truncation_horizon(const DecayEnvelope& envelope, double omega_norm,
                          double xstar_norm, double xstar_lambda_min,
                          double eps) {
  if (!(envelope.kappa > 0.0 && omega_norm > 0.0 && xstar_norm > 0.0 &&
        xstar_lambda_min > 0.0 && eps > 0.0)) {
    throw ValidationError("truncation_horizon inputs must be positive");
  }
  const double kappa = envelope.kappa;
  const double arg = omega_norm * xstar_norm * kappa / (eps * xstar_lambda_min);
  return std::max(kappa, kappa * std::log(arg));
}

double truncation_tail_bound(double kappa, double omega_norm, double xstar_norm,
                             double xstar_lambda_min, double tau) {
  return omega_norm * xstar_norm * kappa / xstar_lambda_min *
         std::exp(-tau / kappa);
}

QuadraturePlan quadrature_plan(double tau, double a_norm_bound,
                               double omega_norm_bound, double rho, double eps1,
                               long node_cap) {
  if (!(tau > 0.0 && a_norm_bound >= 0.0 && omega_norm_bound > 0.0 &&
        rho > 0.0 && eps1 > 0.0)) {
    throw ValidationError("quadrature_plan inputs must be positive");
  }
  const double second_derivative_bound =
      4.0 * a_norm_bound * a_norm_bound * omega_norm_bound * rho * rho;
  const double k_real =
      std::sqrt(tau * tau * tau * second_derivative_bound / (12.0 * eps1));
  if (!(k_real <= static_cast<double>(node_cap))) {
    throw BudgetError("quadrature needs " + std::to_string(k_real) +
                          " nodes, above the cap of " + std::to_string(node_cap) +
                          "; eps is infeasible at this cap",
                      k_real);
  }
  const long nodes = std::max(2L, static_cast<long>(std::ceil(k_real)));
  return make_trapezoid_plan(tau, nodes);
}

Matrix trapezoid_integral(const Matrix& a, const Matrix& omega,
                          const QuadraturePlan& plan) {
  const Eigen::Index n = a.rows();
  const double h = plan.tau / static_cast<double>(plan.nodes);
  const Matrix step = matrix_exponential(a, h);
  PairwiseSum sum;
  Matrix e = Matrix::Identity(n, n);
  for (long k = 0; k <= plan.nodes; ++k) {
    if (k > 0) {
      e = (k % kReanchorEvery == 0) ? matrix_exponential(a, plan.times[k])
                                    : Matrix(e * step);
    }
    sum.add(plan.weights[k] * (e * omega * e.transpose()));
  }
  return symmetrize(sum.total(n));
}

Matrix truncated_solution(const Matrix& a, const Matrix& omega, double tau) {
  const LyapunovSolution full = solve_lyapunov_direct(a, omega);
  const Matrix e = matrix_exponential(a, tau);
  return symmetrize(full.x - e * full.x * e.transpose());
}

LyapunovSolution solve_lyapunov_quadrature(const Matrix& a, const Matrix& omega,
                                           double eps,
                                           const QuadratureOptions& options) {
  require_lyapunov_operands(a, omega);
  if (!(eps > 0.0)) throw ValidationError("quadrature eps must be positive");
  if (!(options.quadrature_share > 0.0 && options.quadrature_share < 1.0)) {
    throw ValidationError("quadrature_share must lie in (0, 1)");
  }
  require_stable(a);

  const Eigen::Index n = a.rows();
  const SpectralSummary omega_spec = spectral_summary(omega);
  if (!(omega_spec.lambda_min > 0.0)) {
    throw ValidationError("quadrature solver needs a positive-definite Ω");
  }

  double xstar_norm = 0.0;
  double xstar_lmin = 0.0;
  double rho = 0.0;
  if (n <= options.bootstrap_max_n) {
    const LyapunovSolution boot = solve_lyapunov_direct(a, omega);
    const SpectralSummary xs = spectral_summary(boot.x);
    xstar_norm = xs.spectral_norm;
    xstar_lmin = xs.lambda_min;
    rho = decay_envelope(a).rho;
  }
  if (options.xstar_norm_bound) xstar_norm = *options.xstar_norm_bound;
  if (options.xstar_lambda_min_bound) xstar_lmin = *options.xstar_lambda_min_bound;
  if (options.rho) rho = *options.rho;
  if (!(xstar_norm > 0.0 && xstar_lmin > 0.0 && rho > 0.0)) {
    throw ValidationError(
        "quadrature solver needs ‖X*‖, λ_min(X*) and rho bounds for n = " +
        std::to_string(n));
  }

  // Spectral-norm budget that certifies the Frobenius target.
  const double eps_spectral = eps / std::sqrt(static_cast<double>(n));
  const double eps_quad = options.quadrature_share * eps_spectral;
  const double eps_tail = eps_spectral - eps_quad;

  DecayEnvelope env;
  env.rho = rho;
  env.kappa = xstar_norm / omega_spec.lambda_min;
  const double tau = truncation_horizon(env, omega_spec.spectral_norm,
                                        xstar_norm, xstar_lmin, eps_tail);
  const QuadraturePlan plan =
      quadrature_plan(tau, spectral_norm(a), omega_spec.spectral_norm, rho,
                      eps_quad, options.node_cap);

  LyapunovSolution sol;
  sol.x = trapezoid_integral(a, omega, plan);
  sol.residual_norm = lyapunov_residual(a, sol.x, omega);
  sol.method = LyapunovMethod::kQuadrature;
  sol.tau = tau;
  sol.nodes = plan.nodes;
  sol.error_budget = eps;
  return sol;
}

}  // namespace lqpg
