#pragma once

#include <stdexcept>
#include <string>

namespace bpinn {

/// Category of a library failure. The CLI maps each category to a distinct
/// exit code and reports it in its error JSON.
enum class ErrorKind {
  kDimension,
  kParameter,
  kConditioning,
  kBatch,
  kDivergence,
  kIo,
  kSchema,
  kUsage,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DimensionError : public Error {
 public:
  DimensionError(const std::string& context, std::size_t expected,
                 std::size_t actual);
  explicit DimensionError(const std::string& what)
      : Error(ErrorKind::kDimension, what) {}
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what)
      : Error(ErrorKind::kParameter, what) {}
};

class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double smallest_pivot)
      : Error(ErrorKind::kConditioning, what), smallest_pivot_(smallest_pivot) {}

  double smallest_pivot() const noexcept { return smallest_pivot_; }

 private:
  double smallest_pivot_;
};

class BatchError : public Error {
 public:
  explicit BatchError(const std::string& what) : Error(ErrorKind::kBatch, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(ErrorKind::kSchema, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

}  // namespace bpinn
