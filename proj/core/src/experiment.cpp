#include "lqpg/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"

#include "lqpg/error.hpp"
#include "lqpg/records.hpp"
#include "lqpg/rng.hpp"

namespace lqpg {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

bool uses_size(Family f) {
  return f == Family::kMassSpring || f == Family::kRandomHurwitz;
}

const char* size_key(Family f) { return f == Family::kRandomHurwitz ? "n" : "g"; }

double get_number(const json& j, const char* key) {
  if (!j.is_number()) throw ValidationError(std::string("config key '") + key + "' must be a number");
  return j.get<double>();
}

long long get_integer(const json& j, const char* key) {
  if (!j.is_number_integer()) {
    throw ValidationError(std::string("config key '") + key + "' must be an integer");
  }
  return j.get<long long>();
}

std::string sha1_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw NumericalError("SHA-1 digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

std::string optional_int(const std::optional<int>& v) {
  return v ? std::to_string(*v) : std::string();
}

}  // namespace

void validate(const BenchmarkSpec& spec) {
  if (spec.family == Family::kMassSpring && spec.size < 1) {
    throw ValidationError("mass_spring needs g >= 1");
  }
  if (spec.family == Family::kRandomHurwitz && (spec.size < 1 || spec.size > 64)) {
    throw ValidationError("random_hurwitz needs 1 <= n <= 64");
  }
  if (!(spec.theta >= 0.0 && spec.theta < 0.5)) {
    throw ValidationError("theta must lie in [0, 0.5)");
  }
  if (spec.sigma && !(*spec.sigma >= 0.0)) throw ValidationError("sigma must be >= 0");
  if (!(spec.target_eps >= 0.0)) throw ValidationError("target_eps must be >= 0");
  if (!(spec.target_gap >= 0.0)) throw ValidationError("target_gap must be >= 0");
  if (spec.max_iters < 1) throw ValidationError("max_iters must be >= 1");
}

BenchmarkSpec parse_spec_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  static const std::set<std::string> kKeys = {
      "family", "g", "n", "estimator", "theta", "sigma", "target_eps",
      "target_gap", "max_iters", "seed", "residual_rule"};
  for (const auto& item : j.items()) {
    if (!kKeys.count(item.key())) {
      throw ValidationError("unknown config key '" + item.key() + "'");
    }
  }
  BenchmarkSpec spec;
  if (!j.contains("family") || !j["family"].is_string()) {
    throw ValidationError("config needs a string 'family'");
  }
  spec.family = parse_family(j["family"].get<std::string>());
  if (j.contains("g") && j.contains("n")) throw ValidationError("give either 'g' or 'n', not both");
  if (j.contains("g") || j.contains("n")) {
    const char* key = j.contains("g") ? "g" : "n";
    if (!uses_size(spec.family) || std::string(key) != size_key(spec.family)) {
      throw ValidationError(std::string("key '") + key + "' does not apply to family " +
                            std::string(to_string(spec.family)));
    }
    spec.size = static_cast<int>(get_integer(j[key], key));
  }
  if (j.contains("estimator")) {
    if (!j["estimator"].is_string()) throw ValidationError("'estimator' must be a string");
    spec.estimator = parse_estimator(j["estimator"].get<std::string>());
  }
  if (j.contains("theta")) spec.theta = get_number(j["theta"], "theta");
  if (j.contains("sigma") && !j["sigma"].is_null()) spec.sigma = get_number(j["sigma"], "sigma");
  if (j.contains("target_eps")) spec.target_eps = get_number(j["target_eps"], "target_eps");
  if (j.contains("target_gap")) spec.target_gap = get_number(j["target_gap"], "target_gap");
  if (j.contains("max_iters")) spec.max_iters = static_cast<int>(get_integer(j["max_iters"], "max_iters"));
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0)) {
      throw ValidationError("'seed' must be a non-negative integer");
    }
    spec.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("residual_rule")) {
    const std::string rule = j["residual_rule"].is_string() ? j["residual_rule"].get<std::string>() : "";
    if (rule == "paper") {
      spec.residual_rule = ResidualRule::kPaper;
    } else if (rule == "conservative") {
      spec.residual_rule = ResidualRule::kConservative;
    } else {
      throw ValidationError("'residual_rule' must be \"paper\" or \"conservative\"");
    }
  }
  validate(spec);
  return spec;
}

BenchmarkSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_spec_json(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string spec_to_json(const BenchmarkSpec& spec) {
  json j;
  j["family"] = std::string(to_string(spec.family));
  if (uses_size(spec.family)) j[size_key(spec.family)] = spec.size;
  j["estimator"] = std::string(to_string(spec.estimator));
  j["theta"] = spec.theta;
  if (spec.sigma) j["sigma"] = *spec.sigma;
  j["target_eps"] = spec.target_eps;
  j["target_gap"] = spec.target_gap;
  j["max_iters"] = spec.max_iters;
  j["seed"] = spec.seed;
  j["residual_rule"] = spec.residual_rule == ResidualRule::kPaper ? "paper" : "conservative";
  return j.dump();
}

std::string config_hash(const BenchmarkSpec& spec) {
  const std::string body = spec_to_json(spec);
  std::string blob = "blob " + std::to_string(body.size());
  blob.push_back('\0');
  blob += body;
  return sha1_hex(blob);
}

OptimizerConfig optimizer_config(const BenchmarkSpec& spec) {
  OptimizerConfig cfg;
  cfg.sigma = spec.sigma;
  cfg.theta = spec.theta;
  cfg.max_iters = spec.max_iters;
  cfg.target_eps = spec.target_eps;
  cfg.target_gap = spec.target_gap;
  cfg.estimator = spec.estimator;
  cfg.seed = spec.seed;
  cfg.residual_rule = spec.residual_rule;
  return cfg;
}

std::string run_stem(const BenchmarkSpec& spec) {
  std::string stem(to_string(spec.family));
  if (uses_size(spec.family)) stem += "_" + std::to_string(spec.size);
  std::string est(to_string(spec.estimator));
  for (char& c : est) {
    if (c == '-') c = '_';
  }
  return stem + "_" + est;
}

RunRecord run_experiment(const BenchmarkSpec& spec) {
  validate(spec);
  const auto start = Clock::now();
  const ProblemInstance prob = make_problem(spec.family, spec.size, spec.seed);
  const FeedbackGain k0 = initial_stabilizing_gain(prob);
  const GroundTruth truth = ground_truth(prob, k0);

  RunRecord rec;
  rec.spec = spec;
  rec.config_hash = config_hash(spec);
  rec.trace = policy_gradient_descent(prob, k0, optimizer_config(spec), truth);
  rec.kstar_residual = truth.are_residual;
  try {
    rec.fit = fit_linear_rate(rec.trace);
  } catch (const ValidationError&) {
    rec.fit.reset();
  }
  rec.wall_ms = ms_since(start);

  if (!spec.out_dir.empty()) {
    ensure_dir(spec.out_dir);
    const std::string stem = run_stem(spec);
    rec.csv_path = join(spec.out_dir, stem + ".csv");
    rec.summary_path = join(spec.out_dir, stem + ".json");
    const std::string summary = summary_json(rec, prob);
    write_trace_csv(rec.csv_path, rec.trace.records);
    write_text(rec.summary_path, summary);
  }
  return rec;
}

std::optional<int> iterations_to_gap(const IterationTrace& trace, double gap) {
  for (const IterationRecord& r : trace.records) {
    if (r.f_gap <= gap) return r.iter;
  }
  return std::nullopt;
}

CompareResult compare(const BenchmarkSpec& spec, const CompareOptions& options) {
  const auto start = Clock::now();
  BenchmarkSpec robust = spec;
  robust.estimator = EstimatorKind::kRobust;
  robust.sigma = options.robust_sigma;
  robust.max_iters = options.robust_max_iters;
  robust.target_gap = options.target_gap;
  BenchmarkSpec baseline = spec;
  baseline.estimator = EstimatorKind::kTwoPoint;
  baseline.sigma = options.baseline_sigma;
  baseline.max_iters = options.baseline_max_iters;
  baseline.target_gap = options.target_gap;

  CompareResult out;
  out.robust = run_experiment(robust);
  out.baseline = run_experiment(baseline);
  out.wall_ratio = out.robust.wall_ms > 0.0 ? out.baseline.wall_ms / out.robust.wall_ms : 0.0;

  std::ostringstream csv;
  csv << "threshold,robust_iters,baseline_iters,baseline_evals\n";
  for (double thr : options.thresholds) {
    CompareRow row;
    row.threshold = thr;
    row.robust_iters = iterations_to_gap(out.robust.trace, thr);
    row.baseline_iters = iterations_to_gap(out.baseline.trace, thr);
    if (row.baseline_iters) {
      row.baseline_evals = out.baseline.trace.records[*row.baseline_iters].evals;
    }
    csv << format_double(thr) << ',' << optional_int(row.robust_iters) << ','
        << optional_int(row.baseline_iters) << ','
        << (row.baseline_evals ? std::to_string(*row.baseline_evals) : std::string()) << '\n';
    out.rows.push_back(row);
  }
  out.wall_ms = ms_since(start);

  if (!spec.out_dir.empty()) {
    write_text(join(spec.out_dir, "compare.csv"), csv.str());
    json j;
    j["robust_wall_ms"] = out.robust.wall_ms;
    j["baseline_wall_ms"] = out.baseline.wall_ms;
    j["wall_ratio"] = out.wall_ratio;
    j["total_wall_ms"] = out.wall_ms;
    j["robust_summary"] = out.robust.summary_path;
    j["baseline_summary"] = out.baseline.summary_path;
    write_text(join(spec.out_dir, "compare.json"), j.dump(2) + "\n");
  }
  return out;
}

std::vector<ScalingRow> scaling_experiment(const std::vector<int>& g_list,
                                           const ScalingOptions& options) {
  if (g_list.empty()) throw ValidationError("scaling experiment needs at least one g");
  for (int g : g_list) {
    if (g < 1) throw ValidationError("scaling experiment needs g >= 1");
  }
  if (options.iterations < 1) throw ValidationError("iteration budget must be >= 1");

  std::vector<ScalingRow> rows;
  for (int g : g_list) {
    const ProblemInstance prob = make_mass_spring(g);
    const FeedbackGain k0 = initial_stabilizing_gain(prob);
    const GroundTruth truth = ground_truth(prob, k0);
    const double kstar_norm = truth.kstar.norm();
    for (EstimatorKind est : {EstimatorKind::kRobust, EstimatorKind::kTwoPoint}) {
      const auto start = Clock::now();
      OptimizerConfig cfg;
      cfg.estimator = est;
      cfg.theta = options.theta;
      cfg.max_iters = options.iterations;
      cfg.seed = sub_seed(options.seed, static_cast<std::uint64_t>(g));
      cfg.sigma = est == EstimatorKind::kRobust ? options.robust_sigma : options.baseline_sigma;
      const IterationTrace trace = policy_gradient_descent(prob, k0, cfg, truth);
      ScalingRow row;
      row.g = g;
      row.n = 2 * g;
      row.method = std::string(to_string(est));
      row.iterations = static_cast<int>(trace.records.size());
      row.rel_f_gap = std::max(0.0, (trace.f_final - truth.fstar) / truth.fstar);
      row.rel_gain_err =
          kstar_norm > 0.0 ? (trace.k_final - truth.kstar).norm() / kstar_norm : 0.0;
      row.wall_ms = ms_since(start);
      rows.push_back(row);
    }
  }

  if (!options.out_dir.empty()) {
    ensure_dir(options.out_dir);
    std::ostringstream csv;
    csv << "g,n,method,iterations,rel_f_gap,rel_gain_err\n";
    json timing = json::array();
    for (const ScalingRow& r : rows) {
      csv << r.g << ',' << r.n << ',' << r.method << ',' << r.iterations << ','
          << format_double(r.rel_f_gap) << ',' << format_double(r.rel_gain_err) << '\n';
      timing.push_back({{"g", r.g}, {"method", r.method}, {"wall_ms", r.wall_ms}});
    }
    write_text(join(options.out_dir, "scaling.csv"), csv.str());
    write_text(join(options.out_dir, "scaling.json"), timing.dump(2) + "\n");
  }
  return rows;
}

}  // namespace lqpg
