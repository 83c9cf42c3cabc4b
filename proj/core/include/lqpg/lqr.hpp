#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include "lqpg/linalg.hpp"
#include "lqpg/lyapunov.hpp"

namespace lqpg {

/// Cost of a non-stabilizing gain.
inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

/// Rank test on [B, AB, …, A^{n−1}B] with singular-value cutoff
/// rel_tol·σ_max.
bool is_controllable(const Matrix& a, const Matrix& b, double rel_tol = 1e-8);

/// Validated LQR data (A, B, Q, R, Σ₀). Immutable once built.
class ProblemInstance {
 public:
  /// Throws ValidationError/DimensionError on inconsistent shapes, non-SPD
  /// weights, or an uncontrollable pair. Σ₀ defaults to the identity.
  static ProblemInstance create(Matrix a, Matrix b, Matrix q, Matrix r,
                                std::optional<Matrix> sigma0 = std::nullopt);

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  const Matrix& q() const { return q_; }
  const Matrix& r() const { return r_; }
  const Matrix& sigma0() const { return sigma0_; }
  Eigen::Index n() const { return a_.rows(); }
  Eigen::Index m() const { return b_.cols(); }

 private:
  ProblemInstance() = default;

  Matrix a_, b_, q_, r_, sigma0_;
};

/// A gain K with its closed loop A − BK and stability status.
class FeedbackGain {
 public:
  FeedbackGain(const ProblemInstance& prob, Matrix k);

  const Matrix& k() const { return k_; }
  const Matrix& closed_loop() const { return closed_loop_; }
  bool stabilizing() const { return stabilizing_; }
  double max_real_part() const { return max_re_; }

 private:
  Matrix k_;
  Matrix closed_loop_;
  bool stabilizing_ = false;
  double max_re_ = 0.0;
};

struct SolveOptions {
  LyapunovMethod method = LyapunovMethod::kDirect;
  double eps = 1e-8;  // quadrature tolerance; ignored by the direct method
};

/// P(K): (A−BK)ᵀP + P(A−BK) + Q + KᵀRK = 0. Throws StabilityError when K is
/// not stabilizing.
LyapunovSolution value_matrix_P(const ProblemInstance& prob,
                                const FeedbackGain& gain,
                                const SolveOptions& opts = {});

/// X(K): (A−BK)X + X(A−BK)ᵀ + Σ₀ = 0.
LyapunovSolution state_covariance_X(const ProblemInstance& prob,
                                    const FeedbackGain& gain,
                                    const SolveOptions& opts = {});

/// f(K) = Tr[P(K) Σ₀], or kInfiniteCost when K is not stabilizing.
double objective(const ProblemInstance& prob, const FeedbackGain& gain,
                 const SolveOptions& opts = {});
double objective(const ProblemInstance& prob, const Matrix& k,
                 const SolveOptions& opts = {});

/// ∇f(K) = 2(RK − BᵀP(K)) X(K).
Matrix exact_gradient(const ProblemInstance& prob, const FeedbackGain& gain,
                      const SolveOptions& opts = {});

/// Objective, value matrices, and gradient from one pair of solves.
struct LqrEvaluation {
  double f = kInfiniteCost;
  Matrix p;
  Matrix x;
  Matrix gradient;
};

LqrEvaluation evaluate(const ProblemInstance& prob, const FeedbackGain& gain,
                       const SolveOptions& opts = {});

/// Constants that hold over the sublevel set {K : f(K) ≤ a}.
struct SublevelConstants {
  double a = 0.0;
  double nu = 0.0;             // ¼(‖A‖₂/√λ_min(Q) + ‖B‖₂/√λ_min(R))^{−2}
  double trace_x_bound = 0.0;  // a/λ_min(Q)
  double k_norm_bound = 0.0;   // a/√(ν λ_min(R))
  double c_lower = 0.0;        // √(2 μ_f ν λ_min(R)/a)
  double pl_constant = 0.0;    // μ_f used for c_lower
};

double sublevel_nu(const ProblemInstance& prob);

/// fstar, when given, enforces the precondition a > f(K*).
SublevelConstants sublevel_constants(const ProblemInstance& prob, double a,
                                     double pl_constant,
                                     std::optional<double> fstar = std::nullopt);

double are_residual(const ProblemInstance& prob, const Matrix& p);

struct AreSolution {
  Matrix p;
  Matrix k;
  double residual = 0.0;  // ‖AᵀP + PA + Q − PBR⁻¹BᵀP‖_F
  int iterations = 0;
};

/// Newton–Kleinman policy iteration from a stabilizing K0.
AreSolution newton_kleinman(const ProblemInstance& prob, const FeedbackGain& k0,
                            double tol = 1e-11, int max_iters = 200);

/// K0 = 0 when A is Hurwitz. Otherwise a Bass pole shift followed by
/// Newton–Kleinman on the auxiliary problem with Q = R = I.
FeedbackGain initial_stabilizing_gain(const ProblemInstance& prob);

/// Empirical PL constant: the minimum of ‖∇f‖²_F / (2(f − f*)) over seeded
/// samples K = K* + r·D inside {f ≤ a}.
double estimate_pl_constant(const ProblemInstance& prob, const Matrix& kstar,
                            double fstar, double a, int samples,
                            std::uint64_t seed);

}  // namespace lqpg
