#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lqpg/encoding.hpp"
#include "lqpg/error.hpp"
#include "lqpg/experiment.hpp"
#include "lqpg/lyapunov.hpp"
#include "lqpg/records.hpp"
#include "lqpg/rng.hpp"

namespace {

using nlohmann::json;
using namespace lqpg;

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Flags shared by the run-style subcommands. Unset flags leave the config
// (or the defaults) untouched.
struct RunFlags {
  std::string config;
  std::optional<std::string> family;
  std::optional<int> g;
  std::optional<int> n;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::string> estimator;
  std::optional<double> theta;
  std::optional<double> sigma;
  std::optional<double> eps;
  std::optional<double> target_gap;
  std::optional<int> max_iters;
  std::optional<std::string> residual_rule;

  void attach(CLI::App* app, bool with_estimator = true) {
    app->add_option("--config", config, "JSON benchmark config");
    app->add_option("--family", family, "mass_spring|aircraft|random_hurwitz|scalar");
    app->add_option("--g", g, "mass_spring size");
    app->add_option("--n", n, "random_hurwitz size");
    app->add_option("--seed", seed);
    app->add_option("--out", out, "output directory");
    if (with_estimator) {
      app->add_option("--estimator", estimator, "exact|robust|two-point");
    }
    app->add_option("--theta", theta);
    app->add_option("--sigma", sigma, "step size");
    app->add_option("--eps", eps, "target ‖K − K*‖_F");
    app->add_option("--target-gap", target_gap, "target f − f*");
    app->add_option("--max-iters", max_iters);
    app->add_option("--residual-rule", residual_rule, "conservative|paper");
  }

  BenchmarkSpec spec() const {
    BenchmarkSpec s;
    if (!config.empty()) s = load_spec(config);
    if (family) s.family = parse_family(*family);
    if (g) s.size = *g;
    if (n) s.size = *n;
    if (seed) s.seed = *seed;
    if (estimator) s.estimator = parse_estimator(*estimator);
    if (theta) s.theta = *theta;
    if (sigma) s.sigma = *sigma;
    if (eps) s.target_eps = *eps;
    if (target_gap) s.target_gap = *target_gap;
    if (max_iters) s.max_iters = *max_iters;
    if (residual_rule) {
      if (*residual_rule == "paper") {
        s.residual_rule = ResidualRule::kPaper;
      } else if (*residual_rule == "conservative") {
        s.residual_rule = ResidualRule::kConservative;
      } else {
        throw ValidationError("--residual-rule must be paper or conservative");
      }
    }
    s.out_dir = out;
    validate(s);
    return s;
  }
};

void print_run(const RunRecord& r) {
  json j;
  j["config_hash"] = r.config_hash;
  j["termination"] = std::string(to_string(r.trace.reason));
  j["iterations"] = r.trace.records.size();
  j["final_f_gap"] = r.trace.records.back().f_gap;
  j["final_gain_err"] = r.trace.records.back().gain_err;
  j["sigma"] = r.trace.sigma;
  j["wall_ms"] = r.wall_ms;
  if (r.fit) {
    j["rate"] = r.fit->rate;
    j["r_squared"] = r.fit->r_squared;
  }
  if (!r.csv_path.empty()) {
    j["csv"] = r.csv_path;
    j["summary"] = r.summary_path;
  }
  std::cout << j.dump(2) << '\n';
}

int cmd_lyapunov(const RunFlags& flags, const std::string& method, double eps, int rand_n) {
  Matrix a;
  Matrix omega;
  if (rand_n > 0) {
    const std::uint64_t seed = flags.seed.value_or(0);
    a = random_hurwitz_matrix(rand_n, sub_seed(seed, 0));
    omega = random_spd(rand_n, sub_seed(seed, 1));
  } else {
    const BenchmarkSpec s = flags.spec();
    const ProblemInstance prob = make_problem(s.family, s.size, s.seed);
    const FeedbackGain k0 = initial_stabilizing_gain(prob);
    a = k0.closed_loop().transpose();
    omega = symmetrize(prob.q() + k0.k().transpose() * prob.r() * k0.k());
  }
  LyapunovSolution sol;
  if (method == "direct") {
    sol = solve_lyapunov_direct(a, omega);
  } else if (method == "quadrature") {
    sol = solve_lyapunov_quadrature(a, omega, eps);
  } else {
    throw ValidationError("--method must be direct or quadrature");
  }
  json j;
  j["n"] = a.rows();
  j["method"] = method;
  j["residual"] = sol.residual_norm;
  if (sol.tau) j["tau"] = *sol.tau;
  if (sol.nodes) j["nodes"] = *sol.nodes;
  if (method == "quadrature") {
    j["eps"] = eps;
    j["diff_to_direct"] = (sol.x - solve_lyapunov_direct(a, omega).x).norm();
  }
  j["x"] = matrix_json(sol.x);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_solve_are(const RunFlags& flags) {
  const BenchmarkSpec s = flags.spec();
  const ProblemInstance prob = make_problem(s.family, s.size, s.seed);
  const FeedbackGain k0 = initial_stabilizing_gain(prob);
  const AreSolution are = newton_kleinman(prob, k0);
  const FeedbackGain kstar(prob, are.k);
  json j;
  j["family"] = std::string(to_string(s.family));
  j["n"] = prob.n();
  j["m"] = prob.m();
  j["are_residual"] = are.residual;
  j["iterations"] = are.iterations;
  j["fstar"] = objective(prob, kstar);
  j["grad_norm"] = exact_gradient(prob, kstar).norm();
  j["kstar"] = matrix_json(are.k);
  j["pstar"] = matrix_json(are.p);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_compare(const RunFlags& flags, CompareOptions opts) {
  BenchmarkSpec s = flags.spec();
  if (flags.sigma) opts.robust_sigma = *flags.sigma;
  if (flags.target_gap) opts.target_gap = *flags.target_gap;
  if (flags.max_iters) opts.robust_max_iters = *flags.max_iters;
  const CompareResult res = compare(s, opts);
  json j;
  j["rows"] = json::array();
  for (const CompareRow& row : res.rows) {
    json r;
    r["threshold"] = row.threshold;
    r["robust_iters"] = row.robust_iters ? json(*row.robust_iters) : json(nullptr);
    r["baseline_iters"] = row.baseline_iters ? json(*row.baseline_iters) : json(nullptr);
    r["baseline_evals"] = row.baseline_evals ? json(*row.baseline_evals) : json(nullptr);
    j["rows"].push_back(r);
  }
  j["wall_ratio"] = res.wall_ratio;
  j["wall_ms"] = res.wall_ms;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_verify_encoding(const RunFlags& flags, int n, const std::vector<double>& eps_list,
                        double gamma_factor) {
  const std::uint64_t seed = flags.seed.value_or(0);
  const Matrix a = random_hurwitz_matrix(n, sub_seed(seed, 0));
  const Matrix omega = random_spd(n, sub_seed(seed, 1));
  EncodingVerifyOptions opts;
  opts.gamma_factor = gamma_factor;
  opts.throw_on_failure = false;
  json out = json::array();
  bool ok = true;
  for (double eps : eps_list) {
    const EncodingReport rep = verify_lyapunov_encoding(a, omega, eps, opts);
    ok = ok && rep.passed;
    out.push_back({{"eps", eps},
                   {"passed", rep.passed},
                   {"deviation", rep.deviation},
                   {"tau", rep.tau},
                   {"nodes", rep.nodes},
                   {"gamma", rep.gamma},
                   {"gamma_nominal", rep.gamma_nominal},
                   {"gamma_bound", rep.gamma_bound},
                   {"encoding_eps", rep.encoding_eps},
                   {"queries", rep.queries},
                   {"predicted_queries", rep.predicted_queries}});
  }
  std::cout << out.dump(2) << '\n';
  return ok ? 0 : 3;
}

int cmd_scaling(const RunFlags& flags, std::vector<int> g_list, int iters) {
  ScalingOptions opts;
  opts.iterations = iters;
  opts.out_dir = flags.out;
  if (flags.seed) opts.seed = *flags.seed;
  if (flags.theta) opts.theta = *flags.theta;
  if (flags.sigma) opts.robust_sigma = *flags.sigma;
  const std::vector<ScalingRow> rows = scaling_experiment(g_list, opts);
  json out = json::array();
  for (const ScalingRow& r : rows) {
    out.push_back({{"g", r.g},
                   {"n", r.n},
                   {"method", r.method},
                   {"rel_f_gap", r.rel_f_gap},
                   {"rel_gain_err", r.rel_gain_err},
                   {"wall_ms", r.wall_ms}});
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LQR policy-gradient toolkit"};
  app.require_subcommand(1);

  RunFlags lyap_flags, are_flags, pg_flags, bench_flags, cmp_flags, enc_flags, scale_flags;

  auto* lyap = app.add_subcommand("lyapunov", "Solve a Lyapunov equation and report the residual");
  lyap_flags.attach(lyap, false);
  std::string lyap_method = "direct";
  double lyap_eps = 1e-6;
  int lyap_rand = 0;
  lyap->add_option("--method", lyap_method, "direct|quadrature");
  lyap->add_option("--tol", lyap_eps, "quadrature tolerance");
  lyap->add_option("--random", lyap_rand, "solve a random Hurwitz instance of this size");

  auto* are = app.add_subcommand("solve-are", "Newton–Kleinman solve of the Riccati equation");
  are_flags.attach(are, false);

  auto* pg = app.add_subcommand("policy-grad", "Run policy gradient descent");
  pg_flags.attach(pg);

  auto* bench = app.add_subcommand("bench", "Run a benchmark config and write CSV/JSON");
  bench_flags.attach(bench);

  auto* cmp = app.add_subcommand("compare", "Robust estimator against the two-point baseline");
  cmp_flags.attach(cmp, false);
  CompareOptions cmp_opts;
  cmp->add_option("--baseline-sigma", cmp_opts.baseline_sigma);
  cmp->add_option("--baseline-max-iters", cmp_opts.baseline_max_iters);

  auto* enc = app.add_subcommand("verify-encoding", "Check the emulated Lyapunov block-encoding");
  enc_flags.attach(enc, false);
  int enc_n = 2;
  std::vector<double> enc_eps = {1e-2, 1e-3, 1e-4};
  double enc_gamma = 1.0;
  enc->add_option("--size", enc_n, "state dimension (<= 16)");
  enc->add_option("--eps-list", enc_eps, "tolerances");
  enc->add_option("--gamma-factor", enc_gamma);

  auto* scale = app.add_subcommand("scaling", "Relative errors of both methods across g");
  scale_flags.attach(scale, false);
  std::vector<int> scale_g = {1, 2, 3, 4};
  int scale_iters = 500;
  scale->add_option("--g-list", scale_g);
  scale->add_option("--iters", scale_iters, "iteration budget per run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*lyap) return cmd_lyapunov(lyap_flags, lyap_method, lyap_eps, lyap_rand);
    if (*are) return cmd_solve_are(are_flags);
    if (*pg) {
      print_run(run_experiment(pg_flags.spec()));
      return 0;
    }
    if (*bench) {
      if (bench_flags.config.empty()) throw ValidationError("bench needs --config");
      BenchmarkSpec s = bench_flags.spec();
      if (s.out_dir.empty()) s.out_dir = ".";
      print_run(run_experiment(s));
      return 0;
    }
    if (*cmp) return cmd_compare(cmp_flags, cmp_opts);
    if (*enc) return cmd_verify_encoding(enc_flags, enc_n, enc_eps, enc_gamma);
    if (*scale) return cmd_scaling(scale_flags, scale_g, scale_iters);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
