#pragma once

#include <string_view>

#include <Eigen/Dense>

namespace lqpg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Rejects matrices with NaN or Inf entries.
void require_finite(const Matrix& m, std::string_view name);
void require_square(const Matrix& m, std::string_view name);
/// Relative asymmetry ‖M − Mᵀ‖_F ≤ rel_tol·max(1, ‖M‖_F).
void require_symmetric(const Matrix& m, std::string_view name,
                       double rel_tol = 1e-10);

Matrix symmetrize(const Matrix& m);

/// e^{M t} by scaling and squaring around a diagonal Padé approximant of
/// degree 3..13 chosen from ‖M t‖₁. The backward error is at unit roundoff
/// level for every admissible tol; tol only has to lie in (0, 1e-3].
Matrix matrix_exponential(const Matrix& m, double t = 1.0, double tol = 1e-12);

inline constexpr double kDefaultHurwitzMargin = 1e-9;

struct HurwitzResult {
  bool hurwitz = false;
  double max_real_part = 0.0;
};

/// True iff every eigenvalue has Re λ < −margin_tol.
HurwitzResult is_hurwitz(const Matrix& m,
                         double margin_tol = kDefaultHurwitzMargin);

/// Eigenvalues of a general real square matrix (Hessenberg + shifted QR).
Eigen::VectorXcd eigenvalues(const Matrix& m);

struct SpectralSummary {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double spectral_norm = 0.0;
  double frobenius_norm = 0.0;
};

/// Eigen-derived scalars of a symmetric matrix.
SpectralSummary spectral_summary(const Matrix& m);

/// Largest singular value; any shape.
double spectral_norm(const Matrix& m);
double lambda_min_symmetric(const Matrix& m);
double lambda_max_symmetric(const Matrix& m);

/// Transient and decay constants of a Hurwitz matrix.
///
/// rho bounds sup_t ‖e^{Mt}‖: the maximum over t = 0 and a geometric grid
/// on [1e-3·kappa, 20·kappa], times 1.1 headroom. kappa = ‖X*‖/λ_min(I)
/// where M X* + X* Mᵀ + I = 0.
struct DecayEnvelope {
  double rho = 1.0;
  double kappa = 1.0;
};

inline constexpr double kEnvelopeHeadroom = 1.1;

DecayEnvelope decay_envelope(const Matrix& m, int grid_points = 64);

/// L = I⊗A + A⊗I, so that L·vec(X) = vec(AX + XAᵀ) with column stacking.
Matrix kron_vectorize(const Matrix& a);

Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

namespace detail {

/// Solves A X + X Aᵀ + Ω = 0 through the Kronecker system. No stability
/// check; callers are responsible for that.
Matrix solve_kronecker_lyapunov(const Matrix& a, const Matrix& omega);

}  // namespace detail

}  // namespace lqpg
