#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lqpg/policy.hpp"
#include "lqpg/problems.hpp"

namespace lqpg {

struct BenchmarkSpec {
  Family family = Family::kMassSpring;
  int size = 4;  // g for mass_spring, n for random_hurwitz, ignored otherwise
  std::uint64_t seed = 0;
  EstimatorKind estimator = EstimatorKind::kExact;
  double theta = 0.1;
  std::optional<double> sigma;
  double target_eps = 0.0;
  double target_gap = 0.0;
  int max_iters = 1000;
  ResidualRule residual_rule = ResidualRule::kConservative;
  /// Output directory; empty keeps everything in memory.
  std::string out_dir;
};

/// Checks family size constraints and numeric ranges.
void validate(const BenchmarkSpec& spec);

/// JSON object with keys family, g | n, estimator, theta, sigma, target_eps,
/// target_gap, max_iters, seed, residual_rule. Unknown keys are rejected.
BenchmarkSpec parse_spec_json(const std::string& text);
BenchmarkSpec load_spec(const std::string& path);

/// Canonical serialization: sorted keys, no whitespace, out_dir omitted.
std::string spec_to_json(const BenchmarkSpec& spec);

/// Git blob id (SHA-1 of "blob <len>\0" + canonical JSON) of the spec.
std::string config_hash(const BenchmarkSpec& spec);

OptimizerConfig optimizer_config(const BenchmarkSpec& spec);

struct RunRecord {
  BenchmarkSpec spec;
  IterationTrace trace;
  std::optional<LinearRateFit> fit;
  double wall_ms = 0.0;
  double kstar_residual = 0.0;
  std::string config_hash;
  std::string csv_path;
  std::string summary_path;
};

/// Runs policy gradient descent from the default stabilizing gain. When
/// spec.out_dir is set, writes <stem>.csv and <stem>.json there.
RunRecord run_experiment(const BenchmarkSpec& spec);

/// File stem <family>_<size>_<estimator>.
std::string run_stem(const BenchmarkSpec& spec);

/// First recorded iteration whose f-gap is at or below gap.
std::optional<int> iterations_to_gap(const IterationTrace& trace, double gap);

struct CompareOptions {
  double robust_sigma = 0.03;
  double baseline_sigma = 0.0005;
  int robust_max_iters = 2000;
  int baseline_max_iters = 100'000;
  double target_gap = 1e-6;
  std::vector<double> thresholds = {1e-2, 1e-4, 1e-6};
};

struct CompareRow {
  double threshold = 0.0;
  std::optional<int> robust_iters;
  std::optional<int> baseline_iters;
  std::optional<long> baseline_evals;
};

struct CompareResult {
  RunRecord robust;
  RunRecord baseline;
  std::vector<CompareRow> rows;
  double wall_ratio = 0.0;  // baseline / robust
  double wall_ms = 0.0;
};

/// Robust estimator against the two-point baseline on spec's problem, each
/// stopped at options.target_gap. Writes both run files and compare.csv.
CompareResult compare(const BenchmarkSpec& spec, const CompareOptions& options = {});

struct ScalingOptions {
  int iterations = 500;
  double theta = 0.1;
  double robust_sigma = 0.03;
  double baseline_sigma = 0.0005;
  std::uint64_t seed = 0;
  std::string out_dir;
};

struct ScalingRow {
  int g = 0;
  int n = 0;
  std::string method;
  int iterations = 0;
  double rel_f_gap = 0.0;     // (f − f*)/f*
  double rel_gain_err = 0.0;  // ‖K − K*‖_F/‖K*‖_F
  double wall_ms = 0.0;
};

/// Mass-spring at every g, robust and two-point for a fixed iteration budget.
/// Writes scaling.csv (without wall times) and scaling.json when out_dir is set.
std::vector<ScalingRow> scaling_experiment(const std::vector<int>& g_list,
                                           const ScalingOptions& options = {});

}  // namespace lqpg
