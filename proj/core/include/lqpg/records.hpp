#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lqpg/experiment.hpp"

namespace lqpg {

inline constexpr const char* kCsvHeader = "iter,f,f_gap,grad_norm,gain_err,evals";

/// One row per record, floating columns with 17 significant digits.
void write_trace_csv(std::ostream& os, const std::vector<IterationRecord>& records);
void write_trace_csv(const std::string& path, const std::vector<IterationRecord>& records);

/// Inverse of write_trace_csv; wall_ms is left at zero. Throws ValidationError
/// naming the line and column on malformed input.
std::vector<IterationRecord> parse_trace_csv(std::istream& is);
std::vector<IterationRecord> read_trace_csv(const std::string& path);

/// Spec echo, termination, fitted rate, r², wall time, K* residual, gains.
/// Throws StabilityError if k_final or K* is not stabilizing.
std::string summary_json(const RunRecord& record, const ProblemInstance& prob);

void write_text(const std::string& path, const std::string& text);

std::string format_double(double v);

}  // namespace lqpg
