#include "lqpg/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "lqpg/error.hpp"
#include "lqpg/rng.hpp"

namespace lqpg {

namespace {

// Relative slack for comparing a normalization against ‖M‖₂.
constexpr double kNormSlack = 1e-12;

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

void require_sound_alpha(const EmulatedEncoding& e, std::string_view what) {
  const double norm = spectral_norm(e.m);
  if (e.alpha < norm - e.eps - kNormSlack * std::max(1.0, norm)) {
    throw ValidationError(std::string(what) + ": normalization " + std::to_string(e.alpha) +
                          " is below ‖M‖₂ = " + std::to_string(norm) +
                          " (sparsity too small?)");
  }
}

long modeled_exp_queries(double alpha, double rho, double t, double eps) {
  const double l = std::log(1.0 / eps);
  return static_cast<long>(std::ceil(alpha * rho * t * l * l));
}

}  // namespace

EmulatedEncoding identity_encoding(Eigen::Index n) {
  return EmulatedEncoding{1.0, Matrix::Identity(n, n), 0.0, 0};
}

int sparsity_of(const Matrix& m) {
  int s = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    s = std::max(s, static_cast<int>((m.row(i).array() != 0.0).count()));
  }
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    s = std::max(s, static_cast<int>((m.col(j).array() != 0.0).count()));
  }
  return std::max(s, 1);
}

EmulatedEncoding encode_problem_matrix(const Matrix& m, int sparsity, EncodingRole role) {
  require_finite(m, "encoded matrix");
  if (sparsity < 1) throw ValidationError("sparsity must be >= 1");
  EmulatedEncoding e;
  e.m = m;
  e.eps = 0.0;
  e.queries = 1;
  switch (role) {
    case EncodingRole::kSparseData:
      e.alpha = sparsity * std::max(1.0, max_abs(m));
      break;
    case EncodingRole::kGain:
      e.alpha = m.norm();
      break;
  }
  require_sound_alpha(e, "encode_problem_matrix");
  return e;
}

EmulatedEncoding encode_closed_loop(const ProblemInstance& prob, const Matrix& k,
                                    int sparsity) {
  if (sparsity < 1) throw ValidationError("sparsity must be >= 1");
  const FeedbackGain gain(prob, k);
  const double scale = std::max({1.0, max_abs(prob.a()), max_abs(prob.b())});
  EmulatedEncoding e;
  e.m = gain.closed_loop();
  e.alpha = sparsity * scale * (k.norm() + 1.0);
  e.queries = 1;
  require_sound_alpha(e, "encode_closed_loop");
  return e;
}

EmulatedEncoding encode_cost_weight(const ProblemInstance& prob, const Matrix& k,
                                    int sparsity) {
  if (sparsity < 1) throw ValidationError("sparsity must be >= 1");
  if (k.rows() != prob.m() || k.cols() != prob.n()) {
    throw DimensionError("gain shape does not match the problem");
  }
  const double scale = std::max({1.0, max_abs(prob.q()), max_abs(prob.r())});
  EmulatedEncoding e;
  e.m = symmetrize(prob.q() + k.transpose() * prob.r() * k);
  e.alpha = sparsity * scale * (k.squaredNorm() + 1.0);
  e.queries = 1;
  require_sound_alpha(e, "encode_cost_weight");
  return e;
}

EmulatedEncoding encode_product(const EmulatedEncoding& e1, const EmulatedEncoding& e2) {
  if (e1.m.cols() != e2.m.rows()) {
    throw DimensionError("encode_product: inner dimensions " + std::to_string(e1.m.cols()) +
                         " and " + std::to_string(e2.m.rows()) + " differ");
  }
  EmulatedEncoding e;
  e.alpha = e1.alpha * e2.alpha;
  e.m = e1.m * e2.m;
  e.eps = e1.alpha * e2.eps + e2.alpha * e1.eps + e1.eps * e2.eps;
  e.queries = e1.queries + e2.queries;
  return e;
}

EmulatedEncoding transpose(const EmulatedEncoding& e) {
  EmulatedEncoding t = e;
  t.m = e.m.transpose();
  return t;
}

EmulatedEncoding encode_matrix_exponential(const EmulatedEncoding& a_enc, double t,
                                           double eps, std::optional<double> rho) {
  require_square(a_enc.m, "encoded generator");
  if (!(t >= 0.0)) throw ValidationError("exponential time must be >= 0");
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("eps must lie in (0, 1)");
  const HurwitzResult hw = is_hurwitz(a_enc.m);
  if (!hw.hurwitz) {
    throw StabilityError("encoded generator is not Hurwitz", hw.max_real_part);
  }
  const double r = rho ? *rho : decay_envelope(a_enc.m).rho;
  if (!(r >= 1.0)) throw ValidationError("rho must be >= 1");
  const double zeta = a_enc.alpha * r;

  EmulatedEncoding e;
  e.alpha = std::max(r, zeta * t);
  e.m = matrix_exponential(a_enc.m, t, std::clamp(eps / 2.0, 1e-15, 1e-3));
  e.eps = eps;
  e.queries = modeled_exp_queries(a_enc.alpha, r, t, eps);
  return e;
}

SelectFamily build_select_family(const EmulatedEncoding& a_enc, const QuadraturePlan& plan,
                                 double eps, std::optional<double> rho) {
  if (plan.nodes < 1 || plan.times.size() != static_cast<std::size_t>(plan.nodes + 1) ||
      plan.weights.size() != plan.times.size()) {
    throw ValidationError("malformed quadrature plan");
  }
  double time_sum = 0.0;
  for (double t : plan.times) time_sum += t;
  const double expected = (plan.nodes + 1) * plan.tau / 2.0;
  if (std::abs(time_sum - expected) > 1e-10 * std::max(1.0, expected)) {
    throw NumericalError("node times sum to " + std::to_string(time_sum) + ", expected " +
                         std::to_string(expected));
  }

  SelectFamily fam;
  fam.plan = plan;
  fam.rho = rho ? *rho : decay_envelope(a_enc.m).rho;
  fam.zeta = a_enc.alpha * fam.rho;
  fam.nodes.reserve(plan.times.size());
  for (double t : plan.times) {
    fam.nodes.push_back(encode_matrix_exponential(a_enc, t, eps, fam.rho));
    fam.query_total += fam.nodes.back().queries;
  }
  const double l = std::log(1.0 / eps);
  fam.cost_model = a_enc.alpha * fam.rho * time_sum * l * l + (plan.nodes + 1);
  if (static_cast<double>(fam.query_total) > fam.cost_model) {
    throw NumericalError("select family used " + std::to_string(fam.query_total) +
                         " queries, above the cost model " +
                         std::to_string(fam.cost_model));
  }
  return fam;
}

EmulatedEncoding lcu_combine(const SelectFamily& family,
                             const EmulatedEncoding& omega_enc) {
  if (family.nodes.empty()) throw ValidationError("empty select family");
  const Eigen::Index n = family.nodes.front().m.rows();
  if (omega_enc.m.rows() != n || omega_enc.m.cols() != n) {
    throw DimensionError("Ω encoding is " + std::to_string(omega_enc.m.rows()) + "×" +
                         std::to_string(omega_enc.m.cols()) + ", select family acts on " +
                         std::to_string(n));
  }
  EmulatedEncoding out;
  out.alpha = 0.0;
  out.m = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < family.nodes.size(); ++k) {
    const EmulatedEncoding& u = family.nodes[k];
    const EmulatedEncoding w = encode_product(encode_product(u, omega_enc), transpose(u));
    const double weight = family.plan.weights[k];
    out.m += weight * w.m;
    out.alpha += std::abs(weight) * w.alpha;
    out.eps += std::abs(weight) * w.eps;
  }
  out.m = symmetrize(out.m);
  // Both select oracles are queried once; state preparation over K+1 indices.
  const double log_k = std::ceil(std::log2(static_cast<double>(family.nodes.size()) + 1.0));
  out.queries = 2 * family.query_total + omega_enc.queries +
                static_cast<long>(log_k * log_k);
  return out;
}

double lcu_gamma(const QuadraturePlan& plan, double zeta, double eta) {
  double gamma = 0.0;
  for (std::size_t k = 0; k < plan.times.size(); ++k) {
    const double zt = zeta * plan.times[k];
    gamma += std::abs(plan.weights[k]) * zt * zt * eta;
  }
  return gamma;
}

std::string EncodingReport::describe() const {
  std::ostringstream os;
  os.precision(6);
  os << "n=" << n << " eps=" << eps << " alpha_A=" << alpha_a << " eta=" << eta
     << " rho=" << rho << " kappa=" << kappa << " zeta=" << zeta << " tau=" << tau
     << " nodes=" << nodes << " eps_trunc=" << eps_truncation
     << " eps_quad=" << eps_quadrature << " eps_node=" << eps_node
     << " |X*|=" << xstar_norm << " lmin(X*)=" << xstar_lambda_min
     << " tail_bound=" << truncation_bound << " deviation=" << deviation
     << " encoding_eps=" << encoding_eps << " gamma=" << gamma
     << " gamma_nominal=" << gamma_nominal << " gamma_bound=" << gamma_bound
     << " queries=" << queries << " predicted=" << predicted_queries;
  return os.str();
}

EncodingReport verify_lyapunov_encoding(const Matrix& a, const Matrix& omega, double eps,
                                        const EncodingVerifyOptions& options) {
  require_square(a, "A");
  if (a.rows() > 16) throw ValidationError("encoding verification is limited to n <= 16");
  if (omega.rows() != a.rows() || omega.cols() != a.cols()) {
    throw DimensionError("Ω must match A");
  }
  require_symmetric(omega, "Ω");
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("eps must lie in (0, 1)");
  if (!(options.gamma_factor > 0.0)) throw ValidationError("gamma_factor must be > 0");

  EncodingReport rep;
  rep.n = a.rows();
  rep.eps = eps;

  const EmulatedEncoding a_enc = encode_problem_matrix(a, sparsity_of(a));
  const EmulatedEncoding omega_enc = encode_problem_matrix(omega, sparsity_of(omega));
  rep.alpha_a = a_enc.alpha;
  rep.eta = omega_enc.alpha;

  const Matrix xstar = solve_lyapunov_direct(a, omega).x;
  const SpectralSummary xs = spectral_summary(xstar);
  const SpectralSummary os = spectral_summary(omega);
  if (!(os.lambda_min > 0.0)) throw ValidationError("Ω must be positive definite");
  rep.xstar_norm = xs.spectral_norm;
  rep.xstar_lambda_min = xs.lambda_min;

  DecayEnvelope env;
  env.rho = decay_envelope(a).rho;
  env.kappa = xs.spectral_norm / os.lambda_min;
  rep.rho = env.rho;
  rep.kappa = env.kappa;
  rep.zeta = rep.alpha_a * rep.rho;

  rep.eps_truncation = eps / 3.0;
  rep.eps_quadrature = eps / 3.0;
  rep.tau = truncation_horizon(env, os.spectral_norm, rep.xstar_norm,
                               rep.xstar_lambda_min, rep.eps_truncation);
  rep.truncation_bound = truncation_tail_bound(env.kappa, os.spectral_norm, rep.xstar_norm,
                                               rep.xstar_lambda_min, rep.tau);
  const QuadraturePlan plan = quadrature_plan(rep.tau, rep.alpha_a, rep.eta, rep.rho,
                                              rep.eps_quadrature, options.node_cap);
  rep.nodes = plan.nodes;

  // Per-node error so that Σ|w_k|(2α_kη ε_node + η ε_node²) ≤ eps/3.
  double weight_sum = 0.0;
  for (std::size_t k = 0; k < plan.times.size(); ++k) {
    const double alpha_k = std::max(rep.rho, rep.zeta * plan.times[k]);
    weight_sum += std::abs(plan.weights[k]) * (2.0 * alpha_k + 1.0) * rep.eta;
  }
  rep.eps_node = std::min(0.5, (eps / 3.0) / weight_sum);

  const SelectFamily family = build_select_family(a_enc, plan, rep.eps_node, rep.rho);
  rep.encoding = lcu_combine(family, omega_enc);
  rep.encoding_eps = rep.encoding.eps;
  rep.gamma = rep.encoding.alpha;
  rep.gamma_nominal = lcu_gamma(plan, rep.zeta, rep.eta);
  rep.gamma_bound = options.gamma_factor * rep.zeta * rep.zeta * rep.eta *
                    rep.tau * rep.tau * rep.tau;
  rep.queries = rep.encoding.queries;
  rep.predicted_queries = rep.alpha_a * rep.alpha_a * rep.rho *
                          std::pow(rep.kappa, 2.5) * std::sqrt(rep.eta / eps);

  rep.deviation = spectral_norm(rep.encoding.m - xstar);
  rep.deviation_ok = rep.deviation <= eps;
  rep.gamma_ok = rep.gamma <= rep.gamma_bound;
  rep.passed = rep.deviation_ok && rep.gamma_ok;
  if (!rep.passed && options.throw_on_failure) {
    throw NumericalError("Lyapunov encoding check failed (" +
                         std::string(rep.deviation_ok ? "" : "deviation > eps; ") +
                         std::string(rep.gamma_ok ? "" : "gamma above bound; ") +
                         rep.describe() + ")");
  }
  return rep;
}

std::vector<double> emulate_trace_estimate(const EmulatedEncoding& p_enc, double theta,
                                           int trials, std::uint64_t seed,
                                           double success_margin) {
  require_symmetric(p_enc.m, "trace-estimated matrix");
  if (!(lambda_min_symmetric(p_enc.m) > 0.0)) {
    throw ValidationError("trace estimation needs a positive-definite matrix");
  }
  if (!(theta > 0.0 && theta <= 1.0)) throw ValidationError("theta must lie in (0, 1]");
  if (trials < 0) throw ValidationError("trials must be >= 0");
  if (!(success_margin >= 0.0)) throw ValidationError("success margin must be >= 0");

  const double trace = p_enc.m.trace();
  const double p = std::min(1.0, 0.8 + success_margin);
  Rng rng(seed);
  const double offset = rng.uniform();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(trials));
  for (int i = 0; i < trials; ++i) {
    const bool success =
        std::floor((i + 1) * p + offset) - std::floor(i * p + offset) >= 1.0;
    double delta = 0.0;
    if (success) {
      delta = rng.uniform(-theta, theta);
    } else {
      const double mag = std::nextafter(theta, 4.0 * theta) +
                         rng.uniform() * (3.0 * theta - std::nextafter(theta, 4.0 * theta));
      delta = rng.uniform() < 0.5 ? -mag : mag;
    }
    out.push_back(trace * (1.0 + delta));
  }
  return out;
}

double emulate_objective_evaluation(const ProblemInstance& prob, const Matrix& k,
                                    double theta, std::uint64_t seed) {
  if (!(theta > 0.0 && theta <= 1.0)) throw ValidationError("theta must lie in (0, 1]");
  const FeedbackGain gain(prob, k);
  if (!gain.stabilizing()) {
    throw StabilityError("objective evaluation needs a stabilizing gain",
                         gain.max_real_part());
  }
  const Matrix omega = symmetrize(prob.q() + k.transpose() * prob.r() * k);
  const Matrix& acl = gain.closed_loop();
  const double f_lower = lambda_min_symmetric(omega) * prob.sigma0().trace() /
                         (2.0 * spectral_norm(acl));

  // f = Tr(P Σ₀) = Tr(Ω X). κ of the P equation scales with the conditioning
  // of Ω, so when its plan overflows the node cap the X equation is used.
  EmulatedEncoding h;
  try {
    const double tol = theta * f_lower / (4.0 * prob.sigma0().norm());
    const Matrix p = solve_lyapunov_quadrature(acl.transpose(), omega, tol).x;
    Eigen::SelfAdjointEigenSolver<Matrix> es(prob.sigma0());
    const Matrix root = es.operatorSqrt();
    h.m = symmetrize(root * p * root);
  } catch (const BudgetError&) {
    const double tol = theta * f_lower / (4.0 * omega.norm());
    const Matrix x = solve_lyapunov_quadrature(acl, prob.sigma0(), tol).x;
    Eigen::SelfAdjointEigenSolver<Matrix> es(omega);
    const Matrix root = es.operatorSqrt();
    h.m = symmetrize(root * x * root);
  }
  h.alpha = spectral_norm(h.m);
  return emulate_trace_estimate(h, theta / 2.0, 1, seed).front();
}

}  // namespace lqpg
