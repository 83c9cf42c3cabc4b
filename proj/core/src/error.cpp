#include "lqpg/error.hpp"

namespace lqpg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kStability: return "stability";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kBudget: return "budget";
    case ErrorKind::kIteration: return "iteration";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation:
    case ErrorKind::kDimension:
    case ErrorKind::kIo:
      return 2;
    case ErrorKind::kStability:
    case ErrorKind::kNumerical:
      return 3;
    case ErrorKind::kBudget:
    case ErrorKind::kIteration:
      return 4;
  }
  return 3;
}

}  // namespace lqpg
