#pragma once

// Reference computations for the tests. None of these call into the library
// code paths they are used to check.

#include <cmath>
#include <complex>
#include <functional>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;

/// e^{M} by a 40-term Taylor series after halving until ‖M‖₁ ≤ 1/2.
inline Matrix expm_taylor(const Matrix& m) {
  int squarings = 0;
  double norm = m.cwiseAbs().colwise().sum().maxCoeff();
  while (norm > 0.5) {
    norm /= 2.0;
    ++squarings;
  }
  const Matrix a = m / std::pow(2.0, squarings);
  Matrix term = Matrix::Identity(m.rows(), m.cols());
  Matrix sum = term;
  for (int k = 1; k <= 40; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

/// Solution of A X + X Aᵀ + Ω = 0 through the eigenbasis of a diagonalizable
/// A: with A = VΛV⁻¹, Y = V⁻¹ΩV⁻ᴴ, X = V·[−Y_ij/(λ_i + conj(λ_j))]·Vᴴ.
inline Matrix lyapunov_eig(const Matrix& a, const Matrix& omega) {
  Eigen::EigenSolver<Matrix> es(a);
  const CMatrix v = es.eigenvectors();
  const Eigen::VectorXcd lam = es.eigenvalues();
  const CMatrix vinv = v.inverse();
  const CMatrix y = vinv * omega.cast<std::complex<double>>() * vinv.adjoint();
  CMatrix z(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      z(i, j) = -y(i, j) / (lam(i) + std::conj(lam(j)));
  return (v * z * v.adjoint()).real();
}

/// Central finite differences of a scalar function of a matrix.
inline Matrix central_difference(const std::function<double(const Matrix&)>& f,
                                 const Matrix& k, double h) {
  Matrix g(k.rows(), k.cols());
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      Matrix kp = k, km = k;
      kp(i, j) += h;
      km(i, j) -= h;
      g(i, j) = (f(kp) - f(km)) / (2.0 * h);
    }
  return g;
}

/// Scalar LQR with ẋ = a x + b u, cost q x² + r u², Σ₀ = s.
struct Scalar {
  double a = -1.0, b = 1.0, q = 1.0, r = 1.0, s = 1.0;
  double p(double k) const { return (q + r * k * k) / (2.0 * (b * k - a)); }
  double x(double k) const { return s / (2.0 * (b * k - a)); }
  double f(double k) const { return p(k) * s; }
  double grad(double k) const { return 2.0 * (r * k - b * p(k)) * x(k); }
  /// Positive root of 2aP − b²P²/r + q = 0, and K* = bP/r.
  double pstar() const {
    const double c = b * b / r;
    return (a + std::sqrt(a * a + c * q)) / c;
  }
  double kstar() const { return b * pstar() / r; }
};

/// Eigenvalues of the mass-spring A = [[0, I], [−T, −T]]: for every
/// eigenvalue μ_j = 2 − 2cos(jπ/(g+1)) of T, the roots of λ² + μλ + μ = 0.
inline Eigen::VectorXcd mass_spring_eigenvalues(int g) {
  Eigen::VectorXcd out(2 * g);
  for (int j = 1; j <= g; ++j) {
    const double mu = 2.0 - 2.0 * std::cos(j * M_PI / (g + 1));
    const std::complex<double> disc = std::sqrt(std::complex<double>(mu * mu - 4.0 * mu));
    out(2 * (j - 1)) = (-mu + disc) / 2.0;
    out(2 * (j - 1) + 1) = (-mu - disc) / 2.0;
  }
  return out;
}

/// Least-squares slope of y against x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

}  // namespace oracle
