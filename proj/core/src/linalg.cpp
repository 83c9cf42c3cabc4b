#include "lqpg/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "lqpg/error.hpp"

namespace lqpg {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Padé numerator coefficients (the denominator uses the same values with
// alternating signs on odd powers).
constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0,
                                          420.0,   30.0,    1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0,
                                          277200.0,   25200.0,   1512.0,
                                          56.0,       1.0};
constexpr std::array<double, 10> kPade9 = {
    17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
    2162160.0,     110880.0,     3960.0,       90.0,        1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};

// Largest ‖A‖₁ for which the degree-m approximant has backward error at
// unit roundoff.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

template <std::size_t N>
Matrix pade_low_degree(const Matrix& a, const std::array<double, N>& b) {
  const Eigen::Index n = a.rows();
  const Matrix ident = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  Matrix power = ident;
  Matrix u_inner = Matrix::Zero(n, n);
  Matrix v = Matrix::Zero(n, n);
  for (std::size_t j = 0; j < N; j += 2) {
    v += b[j] * power;
    u_inner += b[j + 1] * power;
    power = power * a2;
  }
  const Matrix u = a * u_inner;
  return (v - u).partialPivLu().solve(v + u);
}

Matrix pade13(const Matrix& a) {
  const auto& b = kPade13;
  const Eigen::Index n = a.rows();
  const Matrix ident = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix u_inner =
      a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
      b[3] * a2 + b[1] * ident;
  const Matrix u = a * u_inner;
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
                   b[4] * a4 + b[2] * a2 + b[0] * ident;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace

void require_finite(const Matrix& m, std::string_view name) {
  if (!m.allFinite()) {
    throw ValidationError(std::string(name) + " has non-finite entries");
  }
}

void require_square(const Matrix& m, std::string_view name) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError(std::string(name) + " must be square and non-empty, got " +
                         shape(m));
  }
}

void require_symmetric(const Matrix& m, std::string_view name, double rel_tol) {
  require_square(m, name);
  const double asym = (m - m.transpose()).norm();
  if (asym > rel_tol * std::max(1.0, m.norm())) {
    throw ValidationError(std::string(name) + " is not symmetric (‖M−Mᵀ‖_F = " +
                          std::to_string(asym) + ")");
  }
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix matrix_exponential(const Matrix& m, double t, double tol) {
  require_square(m, "matrix_exponential input");
  require_finite(m, "matrix_exponential input");
  if (!(tol > 0.0 && tol <= 1e-3)) {
    throw ValidationError("matrix_exponential tolerance must lie in (0, 1e-3]");
  }
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw ValidationError("matrix_exponential time must be finite and >= 0");
  }
  const Matrix a = m * t;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  if (norm1 == 0.0) return Matrix::Identity(m.rows(), m.cols());
  if (norm1 <= kTheta3) return pade_low_degree(a, kPade3);
  if (norm1 <= kTheta5) return pade_low_degree(a, kPade5);
  if (norm1 <= kTheta7) return pade_low_degree(a, kPade7);
  if (norm1 <= kTheta9) return pade_low_degree(a, kPade9);

  const int squarings =
      std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / kTheta13))));
  Matrix result = pade13(a / std::ldexp(1.0, squarings));
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

Eigen::VectorXcd eigenvalues(const Matrix& m) {
  require_square(m, "eigenvalue input");
  require_finite(m, "eigenvalue input");
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("real Schur QR iteration did not converge",
                         static_cast<int>(solver.getMaxIterations() * m.rows()));
  }
  return solver.eigenvalues();
}

HurwitzResult is_hurwitz(const Matrix& m, double margin_tol) {
  const Eigen::VectorXcd eig = eigenvalues(m);
  const double max_re = eig.real().maxCoeff();
  return {max_re < -margin_tol, max_re};
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  require_finite(m, "spectral_norm input");
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

SpectralSummary spectral_summary(const Matrix& m) {
  require_finite(m, "spectral_summary input");
  require_symmetric(m, "spectral_summary input");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(m),
                                               Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolver did not converge");
  }
  const Vector& ev = solver.eigenvalues();
  SpectralSummary out;
  out.lambda_min = ev.minCoeff();
  out.lambda_max = ev.maxCoeff();
  out.spectral_norm = std::max(std::abs(out.lambda_min), std::abs(out.lambda_max));
  out.frobenius_norm = m.norm();
  return out;
}

double lambda_min_symmetric(const Matrix& m) {
  return spectral_summary(m).lambda_min;
}

double lambda_max_symmetric(const Matrix& m) {
  return spectral_summary(m).lambda_max;
}

DecayEnvelope decay_envelope(const Matrix& m, int grid_points) {
  require_square(m, "decay_envelope input");
  if (grid_points < 16) {
    throw ValidationError("decay_envelope needs at least 16 grid points");
  }
  const HurwitzResult hw = is_hurwitz(m);
  if (!hw.hurwitz) {
    throw StabilityError("decay_envelope requires a Hurwitz matrix",
                         hw.max_real_part);
  }
  const Eigen::Index n = m.rows();
  const Matrix xstar =
      detail::solve_kronecker_lyapunov(m, Matrix::Identity(n, n));
  DecayEnvelope env;
  env.kappa = spectral_norm(xstar);

  const double t_lo = 1e-3 * env.kappa;
  const double t_hi = 20.0 * env.kappa;
  const double ratio = std::pow(t_hi / t_lo, 1.0 / (grid_points - 1));
  double peak = 1.0;  // t = 0
  double t = t_lo;
  for (int i = 0; i < grid_points; ++i, t *= ratio) {
    peak = std::max(peak, spectral_norm(matrix_exponential(m, t)));
  }
  env.rho = kEnvelopeHeadroom * peak;
  return env;
}

Matrix kron_vectorize(const Matrix& a) {
  require_square(a, "kron_vectorize input");
  const Eigen::Index n = a.rows();
  Matrix l = Matrix::Zero(n * n, n * n);
  // Column-major vec: vec(X)[i + n j] = X(i, j).
  // (AX)(i,j) = Σ_k A(i,k) X(k,j); (XAᵀ)(i,j) = Σ_k X(i,k) A(j,k).
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index row = i + n * j;
      for (Eigen::Index k = 0; k < n; ++k) {
        l(row, k + n * j) += a(i, k);
        l(row, i + n * k) += a(j, k);
      }
    }
  }
  return l;
}

Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) {
    throw DimensionError("unvec: length " + std::to_string(v.size()) +
                         " does not match " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

namespace detail {

Matrix solve_kronecker_lyapunov(const Matrix& a, const Matrix& omega) {
  const Eigen::Index n = a.rows();
  const Matrix l = kron_vectorize(a);
  const Vector x = l.partialPivLu().solve(-vec(omega));
  return unvec(x, n, n);
}

}  // namespace detail

}  // namespace lqpg
