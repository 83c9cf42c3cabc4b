#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lqpg {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kValidation,  // malformed input: NaN, asymmetric, non-SPD, bad config
  kDimension,   // shape mismatch
  kStability,   // a matrix that must be Hurwitz is not
  kNumerical,   // iteration failed to converge
  kBudget,      // tolerance infeasible at the configured cap, or a noise
                // contract was violated
  kIteration,   // max-iteration exhaustion
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// Exit code contract: 0 success, 2 validation, 3 numerical, 4 budget or
/// iteration exhaustion.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::kValidation, what) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error(ErrorKind::kDimension, what) {}
};

class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, double max_real_part)
      : Error(ErrorKind::kStability, what), max_real_part_(max_real_part) {}

  double max_real_part() const noexcept { return max_real_part_; }

 private:
  double max_real_part_;
};

class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, int iterations = 0)
      : Error(ErrorKind::kNumerical, what), iterations_(iterations) {}

  int iterations() const noexcept { return iterations_; }

 private:
  int iterations_;
};

class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, double measured = 0.0)
      : Error(ErrorKind::kBudget, what), measured_(measured) {}

  /// The quantity that broke the budget (node count, deviation ratio, ...).
  double measured() const noexcept { return measured_; }

 private:
  double measured_;
};

class IterationError : public Error {
 public:
  IterationError(const std::string& what, int iterations)
      : Error(ErrorKind::kIteration, what), iterations_(iterations) {}

  int iterations() const noexcept { return iterations_; }

 private:
  int iterations_;
};

/// Raised by the optimizer when an iterate leaves the stabilizing set.
class StepSizeError : public Error {
 public:
  StepSizeError(const std::string& what, int iteration, double suggested_sigma)
      : Error(ErrorKind::kNumerical, what),
        iteration_(iteration),
        suggested_sigma_(suggested_sigma) {}

  int iteration() const noexcept { return iteration_; }
  double suggested_sigma() const noexcept { return suggested_sigma_; }

 private:
  int iteration_;
  double suggested_sigma_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

}  // namespace lqpg
