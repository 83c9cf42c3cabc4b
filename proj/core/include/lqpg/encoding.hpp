#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lqpg/lqr.hpp"
#include "lqpg/lyapunov.hpp"

namespace lqpg {

/// Classical stand-in for an (alpha, eps)-block-encoding of m. The unitary
/// is never built; m is the exact target and eps bounds the spectral-norm
/// deviation a real encoding would carry.
struct EmulatedEncoding {
  double alpha = 1.0;
  Matrix m;
  double eps = 0.0;
  long queries = 0;
};

EmulatedEncoding identity_encoding(Eigen::Index n);

enum class EncodingRole {
  kSparseData,  // s·max(1, max|m_ij|)
  kGain,        // ‖K‖_F
};

/// Oracle-level encoding with eps = 0 and one query. Throws ValidationError
/// if the normalization falls below ‖m‖₂, which means s understates the
/// sparsity.
EmulatedEncoding encode_problem_matrix(const Matrix& m, int sparsity,
                                       EncodingRole role = EncodingRole::kSparseData);

/// A − BK with alpha = s·c·(‖K‖_F + 1), c = max(1, max|A_ij|, max|B_ij|).
EmulatedEncoding encode_closed_loop(const ProblemInstance& prob, const Matrix& k,
                                    int sparsity);
/// Q + KᵀRK with alpha = s·c·(‖K‖²_F + 1), c = max(1, max|Q_ij|, max|R_ij|).
EmulatedEncoding encode_cost_weight(const ProblemInstance& prob, const Matrix& k,
                                    int sparsity);

/// Largest number of nonzeros in any row or column.
int sparsity_of(const Matrix& m);

/// alpha = α₁α₂, eps = α₁ε₂ + α₂ε₁ + ε₁ε₂, queries add.
EmulatedEncoding encode_product(const EmulatedEncoding& e1, const EmulatedEncoding& e2);

EmulatedEncoding transpose(const EmulatedEncoding& e);

/// e^{𝒜t} from an encoding of Hurwitz 𝒜. Normalization ζt with ζ = α·ρ,
/// clamped below at ρ so that it never drops under ‖e^{𝒜t}‖₂; queries are
/// ceil(α·ρ·t·log²(1/eps)). ρ defaults to the decay envelope of 𝒜.
EmulatedEncoding encode_matrix_exponential(const EmulatedEncoding& a_enc, double t,
                                           double eps,
                                           std::optional<double> rho = std::nullopt);

struct SelectFamily {
  std::vector<EmulatedEncoding> nodes;  // e^{𝒜 t_k}, k = 0..K
  QuadraturePlan plan;
  double zeta = 0.0;
  double rho = 1.0;
  long query_total = 0;
  /// α·ρ·Σt_k·log²(1/ε) + (K+1); query_total never exceeds it.
  double cost_model = 0.0;
};

SelectFamily build_select_family(const EmulatedEncoding& a_enc, const QuadraturePlan& plan,
                                 double eps, std::optional<double> rho = std::nullopt);

/// Σ_k w_k U_k Ω U_kᵀ. Each term is composed with encode_product, so
/// alpha = Σ|w_k|α_k²η and eps = Σ|w_k|(2α_kηε_k + ηε_k²) when Ω is exact.
EmulatedEncoding lcu_combine(const SelectFamily& family,
                             const EmulatedEncoding& omega_enc);

/// Σ_k |w_k| ζ² t_k² η evaluated from the plan alone.
double lcu_gamma(const QuadraturePlan& plan, double zeta, double eta);

struct EncodingVerifyOptions {
  /// gamma must stay below gamma_factor·ζ²η·τ³.
  double gamma_factor = 1.0;
  bool throw_on_failure = true;
  long node_cap = 1'000'000;
};

struct EncodingReport {
  Eigen::Index n = 0;
  double eps = 0.0;
  double alpha_a = 0.0;  // normalization of 𝒜
  double eta = 0.0;      // normalization of Ω
  double rho = 0.0;
  double kappa = 0.0;
  double zeta = 0.0;
  double tau = 0.0;
  long nodes = 0;
  double eps_truncation = 0.0;
  double eps_quadrature = 0.0;
  double eps_node = 0.0;

  double xstar_norm = 0.0;
  double xstar_lambda_min = 0.0;
  double truncation_bound = 0.0;
  double deviation = 0.0;  // ‖M − X*‖₂
  double encoding_eps = 0.0;

  double gamma = 0.0;            // alpha of the X encoding
  double gamma_nominal = 0.0;    // Σ|w_k|ζ²t_k²η
  double gamma_bound = 0.0;      // gamma_factor·ζ²η·τ³
  long queries = 0;
  double predicted_queries = 0.0;  // α²ρ·κ^{5/2}·√(η/ε)

  bool deviation_ok = false;
  bool gamma_ok = false;
  bool passed = false;
  EmulatedEncoding encoding;

  std::string describe() const;
};

/// Truncation horizon, trapezoid plan, select family and LCU for
/// 𝒜X + X𝒜ᵀ + Ω = 0, checked against a direct solve. n ≤ 16.
/// The budget is eps/3 each for truncation, trapezoid and node encodings.
EncodingReport verify_lyapunov_encoding(const Matrix& a, const Matrix& omega, double eps,
                                        const EncodingVerifyOptions& options = {});

/// Tr(M)·(1 + δ) per trial. Successes (|δ| ≤ θ) are placed on a seeded
/// Beatty sequence of density min(1, 4/5 + margin), so every prefix of N
/// trials holds at least floor(N·p) of them; failures have θ < |δ| ≤ 3θ.
std::vector<double> emulate_trace_estimate(const EmulatedEncoding& p_enc, double theta,
                                           int trials, std::uint64_t seed,
                                           double success_margin = 0.0);

/// f(K) to multiplicative error θ on a success draw: P from the quadrature
/// solver at a Frobenius tolerance of θ·f_lb/(4‖Σ₀‖_F), with
/// f_lb = λ_min(Q + KᵀRK)·Tr(Σ₀)/(2‖A − BK‖₂), then one trace trial at θ/2 on
/// Σ₀^{1/2} P Σ₀^{1/2}. If that plan exceeds the node cap, X(K) is solved
/// instead at tolerance θ·f_lb/(4‖Ω‖_F) and the trace taken on Ω^{1/2} X Ω^{1/2}.
double emulate_objective_evaluation(const ProblemInstance& prob, const Matrix& k,
                                    double theta, std::uint64_t seed);

}  // namespace lqpg
