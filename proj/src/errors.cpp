#include "bpinn/errors.hpp"

namespace bpinn {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kParameter: return "parameter";
    case ErrorKind::kConditioning: return "conditioning";
    case ErrorKind::kBatch: return "batch";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kSchema: return "schema";
    case ErrorKind::kUsage: return "usage";
  }
  return "unknown";
}

DimensionError::DimensionError(const std::string& context, std::size_t expected,
                               std::size_t actual)
    : Error(ErrorKind::kDimension, context + ": expected length " +
                                       std::to_string(expected) + ", got " +
                                       std::to_string(actual)) {}

}  // namespace bpinn
