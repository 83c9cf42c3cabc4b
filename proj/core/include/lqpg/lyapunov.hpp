#pragma once

#include <optional>
#include <vector>

#include "lqpg/linalg.hpp"

namespace lqpg {

enum class LyapunovMethod { kDirect, kQuadrature };

/// Solution of A X + X Aᵀ + Ω = 0.
struct LyapunovSolution {
  Matrix x;
  double residual_norm = 0.0;  // ‖A X + X Aᵀ + Ω‖_F
  LyapunovMethod method = LyapunovMethod::kDirect;
  std::optional<double> tau;
  std::optional<long> nodes;
  std::optional<double> error_budget;
};

double lyapunov_residual(const Matrix& a, const Matrix& x, const Matrix& omega);

/// Kronecker solve of (I⊗A + A⊗I) vec(X) = −vec(Ω) with one step of
/// iterative refinement. Throws StabilityError for non-Hurwitz A.
LyapunovSolution solve_lyapunov_direct(const Matrix& a, const Matrix& omega);

/// Trapezoidal rule on [0, tau] with nodes+1 points t_k = k·tau/nodes.
struct QuadraturePlan {
  double tau = 0.0;
  long nodes = 2;
  std::vector<double> weights;
  std::vector<double> times;
};

QuadraturePlan make_trapezoid_plan(double tau, long nodes);

/// Integration horizon that makes the truncated integral eps-close to X*:
/// tau = kappa·log(‖Ω‖·‖X*‖·kappa / (eps·λ_min(X*))), never below kappa.
double truncation_horizon(const DecayEnvelope& envelope, double omega_norm,
                          double xstar_norm, double xstar_lambda_min,
                          double eps);

/// Upper bound on ‖X* − X_tau‖ from the exponential decay estimate:
/// (‖Ω‖·‖X*‖·kappa/λ_min(X*))·e^{−tau/kappa}.
double truncation_tail_bound(double kappa, double omega_norm,
                             double xstar_norm, double xstar_lambda_min,
                             double tau);

/// Node count K = ceil(sqrt(tau³·4α²η·rho²/(12·eps1))), at least 2, so the
/// trapezoid error stays below eps1 for ‖A‖ ≤ α, ‖Ω‖ ≤ η, ‖e^{At}‖ ≤ rho.
QuadraturePlan quadrature_plan(double tau, double a_norm_bound,
                               double omega_norm_bound, double rho,
                               double eps1, long node_cap = 1'000'000);

/// Σ_k w_k e^{A t_k} Ω e^{Aᵀ t_k}. Node exponentials are propagated by one
/// step matrix and re-anchored with a fresh exponential every 64 nodes; the
/// sum is a fixed-order pairwise reduction.
Matrix trapezoid_integral(const Matrix& a, const Matrix& omega,
                          const QuadraturePlan& plan);

/// X_tau = X* − e^{A tau} X* e^{Aᵀ tau}, the exact finite-horizon integral.
Matrix truncated_solution(const Matrix& a, const Matrix& omega, double tau);

struct QuadratureOptions {
  long node_cap = 1'000'000;
  /// Fraction of the (spectral) budget given to the trapezoid error; the
  /// remainder goes to truncation.
  double quadrature_share = 1.0 / 3.0;
  /// Above this size the bootstrap direct solve is skipped and the bounds
  /// below must be supplied.
  long bootstrap_max_n = 64;
  std::optional<double> xstar_norm_bound;
  std::optional<double> xstar_lambda_min_bound;
  std::optional<double> rho;
};

/// Truncated-integral trapezoid solver with ‖X − X*‖_F ≤ eps.
LyapunovSolution solve_lyapunov_quadrature(const Matrix& a, const Matrix& omega,
                                           double eps,
                                           const QuadratureOptions& options = {});

}  // namespace lqpg
