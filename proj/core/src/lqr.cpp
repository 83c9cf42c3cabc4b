#include "lqpg/lqr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lqpg/error.hpp"
#include "lqpg/rng.hpp"

namespace lqpg {

namespace {

void require_spd(const Matrix& m, std::string_view name) {
  require_finite(m, name);
  require_symmetric(m, name);
  if (!(lambda_min_symmetric(m) > 0.0)) {
    throw ValidationError(std::string(name) + " must be positive definite");
  }
}

LyapunovSolution solve(const Matrix& a, const Matrix& omega,
                       const SolveOptions& opts) {
  if (opts.method == LyapunovMethod::kQuadrature) {
    return solve_lyapunov_quadrature(a, omega, opts.eps);
  }
  return solve_lyapunov_direct(a, omega);
}

void require_stabilizing(const FeedbackGain& gain) {
  if (!gain.stabilizing()) {
    throw StabilityError("gain is not stabilizing (max Re λ(A−BK) = " +
                             std::to_string(gain.max_real_part()) + ")",
                         gain.max_real_part());
  }
}

}  // namespace

bool is_controllable(const Matrix& a, const Matrix& b, double rel_tol) {
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  Matrix ctrb(n, n * m);
  Matrix block = b;
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.middleCols(i * m, m) = block;
    block = a * block;
  }
  Eigen::JacobiSVD<Matrix> svd(ctrb);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return false;
  const double cutoff = rel_tol * sv(0);
  return (sv.array() > cutoff).count() == n;
}

ProblemInstance ProblemInstance::create(Matrix a, Matrix b, Matrix q, Matrix r,
                                        std::optional<Matrix> sigma0) {
  require_square(a, "A");
  require_finite(a, "A");
  require_finite(b, "B");
  const Eigen::Index n = a.rows();
  if (b.rows() != n || b.cols() == 0) {
    throw DimensionError("B must be " + std::to_string(n) + "×m with m ≥ 1");
  }
  const Eigen::Index m = b.cols();
  if (q.rows() != n || q.cols() != n) throw DimensionError("Q must be n×n");
  if (r.rows() != m || r.cols() != m) throw DimensionError("R must be m×m");
  require_spd(q, "Q");
  require_spd(r, "R");
  Matrix s0 = sigma0 ? std::move(*sigma0) : Matrix::Identity(n, n);
  if (s0.rows() != n || s0.cols() != n) throw DimensionError("Σ₀ must be n×n");
  require_spd(s0, "Σ₀");
  if (!is_controllable(a, b)) {
    throw ValidationError("(A, B) is not controllable");
  }

  ProblemInstance prob;
  prob.a_ = std::move(a);
  prob.b_ = std::move(b);
  prob.q_ = symmetrize(q);
  prob.r_ = symmetrize(r);
  prob.sigma0_ = symmetrize(s0);
  return prob;
}

FeedbackGain::FeedbackGain(const ProblemInstance& prob, Matrix k)
    : k_(std::move(k)) {
  if (k_.rows() != prob.m() || k_.cols() != prob.n()) {
    throw DimensionError("gain must be " + std::to_string(prob.m()) + "×" +
                         std::to_string(prob.n()));
  }
  require_finite(k_, "K");
  closed_loop_ = prob.a() - prob.b() * k_;
  const HurwitzResult hw = is_hurwitz(closed_loop_);
  stabilizing_ = hw.hurwitz;
  max_re_ = hw.max_real_part;
}

LyapunovSolution value_matrix_P(const ProblemInstance& prob,
                                const FeedbackGain& gain,
                                const SolveOptions& opts) {
  require_stabilizing(gain);
  const Matrix weight =
      prob.q() + gain.k().transpose() * prob.r() * gain.k();
  return solve(gain.closed_loop().transpose(), symmetrize(weight), opts);
}

LyapunovSolution state_covariance_X(const ProblemInstance& prob,
                                    const FeedbackGain& gain,
                                    const SolveOptions& opts) {
  require_stabilizing(gain);
  return solve(gain.closed_loop(), prob.sigma0(), opts);
}

double objective(const ProblemInstance& prob, const FeedbackGain& gain,
                 const SolveOptions& opts) {
  if (!gain.stabilizing()) return kInfiniteCost;
  const LyapunovSolution p = value_matrix_P(prob, gain, opts);
  return (p.x * prob.sigma0()).trace();
}

double objective(const ProblemInstance& prob, const Matrix& k,
                 const SolveOptions& opts) {
  return objective(prob, FeedbackGain(prob, k), opts);
}

LqrEvaluation evaluate(const ProblemInstance& prob, const FeedbackGain& gain,
                       const SolveOptions& opts) {
  require_stabilizing(gain);
  LqrEvaluation ev;
  ev.p = value_matrix_P(prob, gain, opts).x;
  ev.x = state_covariance_X(prob, gain, opts).x;
  ev.f = (ev.p * prob.sigma0()).trace();
  ev.gradient =
      2.0 * (prob.r() * gain.k() - prob.b().transpose() * ev.p) * ev.x;
  return ev;
}

Matrix exact_gradient(const ProblemInstance& prob, const FeedbackGain& gain,
                      const SolveOptions& opts) {
  return evaluate(prob, gain, opts).gradient;
}

double sublevel_nu(const ProblemInstance& prob) {
  const double term = spectral_norm(prob.a()) / std::sqrt(lambda_min_symmetric(prob.q())) +
                      spectral_norm(prob.b()) / std::sqrt(lambda_min_symmetric(prob.r()));
  return 0.25 / (term * term);
}

SublevelConstants sublevel_constants(const ProblemInstance& prob, double a,
                                     double pl_constant,
                                     std::optional<double> fstar) {
  if (!(a > 0.0)) throw ValidationError("sublevel value a must be positive");
  if (fstar && !(a > *fstar)) {
    throw ValidationError("sublevel value a must exceed f(K*)");
  }
  if (!(pl_constant >= 0.0)) throw ValidationError("PL constant must be >= 0");
  const double lmin_q = lambda_min_symmetric(prob.q());
  const double lmin_r = lambda_min_symmetric(prob.r());
  SublevelConstants c;
  c.a = a;
  c.nu = sublevel_nu(prob);
  c.trace_x_bound = a / lmin_q;
  c.k_norm_bound = a / std::sqrt(c.nu * lmin_r);
  c.pl_constant = pl_constant;
  c.c_lower = std::sqrt(2.0 * pl_constant * c.nu * lmin_r / a);
  return c;
}

double are_residual(const ProblemInstance& prob, const Matrix& p) {
  const Matrix pb = p * prob.b();
  const Matrix res = prob.a().transpose() * p + p * prob.a() + prob.q() -
                     pb * prob.r().llt().solve(pb.transpose());
  return res.norm();
}

AreSolution newton_kleinman(const ProblemInstance& prob, const FeedbackGain& k0,
                            double tol, int max_iters) {
  if (!k0.stabilizing()) {
    throw StabilityError("Newton–Kleinman needs a stabilizing initial gain",
                         k0.max_real_part());
  }
  const auto r_llt = prob.r().llt();
  Matrix k = k0.k();
  AreSolution best;
  best.residual = kInfiniteCost;
  int stalled = 0;
  for (int it = 1; it <= max_iters; ++it) {
    const FeedbackGain gain(prob, k);
    if (!gain.stabilizing()) {
      throw NumericalError("Newton–Kleinman iterate left the stabilizing set at "
                           "iteration " + std::to_string(it) + " (max Re λ = " +
                               std::to_string(gain.max_real_part()) + ")",
                           it);
    }
    const Matrix p = value_matrix_P(prob, gain).x;
    const double res = are_residual(prob, p);
    if (res < best.residual) {
      best.p = p;
      best.k = r_llt.solve(prob.b().transpose() * p);
      best.residual = res;
      best.iterations = it;
      stalled = 0;
    } else if (++stalled >= 3) {
      break;
    }
    if (res <= tol) return best;
    k = r_llt.solve(prob.b().transpose() * p);
  }
  if (best.residual <= tol) return best;
  if (best.iterations + 3 <= max_iters) {
    throw NumericalError("Newton–Kleinman stagnated at ARE residual " +
                             std::to_string(best.residual) + " > tol " +
                             std::to_string(tol),
                         best.iterations);
  }
  throw IterationError("Newton–Kleinman hit the iteration cap with residual " +
                           std::to_string(best.residual),
                       max_iters);
}

FeedbackGain initial_stabilizing_gain(const ProblemInstance& prob) {
  const Eigen::Index n = prob.n();
  const Eigen::Index m = prob.m();
  if (is_hurwitz(prob.a()).hurwitz) return FeedbackGain(prob, Matrix::Zero(m, n));

  // Bass: with A_β = A + βI anti-stable, solve A_β S + S A_βᵀ = 2BBᵀ; then
  // (A − BBᵀS⁻¹) S + S (·)ᵀ = −2βS, so K = BᵀS⁻¹ stabilizes.
  const Eigen::VectorXcd eig = eigenvalues(prob.a());
  const double beta = 1.0 + eig.real().cwiseAbs().maxCoeff();
  const Matrix shifted = -(prob.a() + beta * Matrix::Identity(n, n));
  const Matrix s = symmetrize(detail::solve_kronecker_lyapunov(
      shifted, 2.0 * prob.b() * prob.b().transpose()));
  const Matrix k_bass = prob.b().transpose() * s.llt().solve(Matrix::Identity(n, n));
  FeedbackGain bass(prob, k_bass);
  if (!bass.stabilizing()) {
    throw NumericalError("pole-shifting initial gain failed to stabilize");
  }
  try {
    const ProblemInstance aux = ProblemInstance::create(
        prob.a(), prob.b(), Matrix::Identity(n, n), Matrix::Identity(m, m));
    const AreSolution are = newton_kleinman(aux, bass, 1e-9, 100);
    FeedbackGain refined(prob, are.k);
    if (refined.stabilizing()) return refined;
  } catch (const Error&) {
  }
  return bass;
}

double estimate_pl_constant(const ProblemInstance& prob, const Matrix& kstar,
                            double fstar, double a, int samples,
                            std::uint64_t seed) {
  if (samples < 1) throw ValidationError("PL estimate needs at least one sample");
  if (!(a > fstar)) throw ValidationError("sublevel value a must exceed f(K*)");
  Rng rng(seed);
  const double scale = 1.0 + kstar.norm();
  double mu = kInfiniteCost;
  int accepted = 0;
  for (int attempt = 0; attempt < 50 * samples && accepted < samples; ++attempt) {
    const Matrix dir = rng.unit_sphere(kstar.rows(), kstar.cols());
    const double radius = scale * std::pow(10.0, rng.uniform(-3.0, 0.5));
    const FeedbackGain gain(prob, kstar + radius * dir);
    if (!gain.stabilizing()) continue;
    const LqrEvaluation ev = evaluate(prob, gain);
    const double gap = ev.f - fstar;
    if (!(ev.f <= a) || !(gap > 1e-10 * std::max(1.0, fstar))) continue;
    mu = std::min(mu, ev.gradient.squaredNorm() / (2.0 * gap));
    ++accepted;
  }
  if (accepted == 0) {
    throw NumericalError("no sampled gains landed in the sublevel set");
  }
  return mu;
}

}  // namespace lqpg
