#pragma once

#include "bpinn/types.hpp"

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace bpinn {

/// Linear map H: R^n -> R^m with a matrix-free apply and adjoint.
///
/// Kinds:
///   Dense          explicit m x n matrix
///   Convolution1D  zero-padded "same" convolution, m = n, kernel centre at
///                  index floor(len/2):  y_i = sum_k h_k x_{i + c - k}
///   Mask           row selection of a strictly increasing index set
///   Identity       m = n
///   FirstDifference (n-1) x n, y_i = x_{i+1} - x_i (non-circular)
///
/// Operators are immutable after construction.
class LinearOperator {
 public:
  struct Dense {
    Matrix matrix;
  };
  struct Convolution1D {
    Vector kernel;
    std::size_t n;
  };
  struct Mask {
    std::vector<std::size_t> kept;
    std::size_t n;
  };
  struct Identity {
    std::size_t n;
  };
  struct FirstDifference {
    std::size_t n;
  };
  using Kind = std::variant<Dense, Convolution1D, Mask, Identity, FirstDifference>;

  static LinearOperator dense(Matrix matrix);
  static LinearOperator convolution(Vector kernel, std::size_t n);
  static LinearOperator mask(std::vector<std::size_t> kept, std::size_t n);
  static LinearOperator identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const Kind& kind() const noexcept { return kind_; }
  std::string kind_name() const;

  Vector apply(const Vector& f) const;
  Vector apply_adjoint(const Vector& g) const;

  /// Dense m x n matrix whose column j equals apply(e_j).
  Matrix materialize() const;

  /// H'H + lambda I, exactly symmetric.
  Matrix gram_regularized(double lambda) const;

 private:
  LinearOperator(Kind kind, std::size_t rows, std::size_t cols)
      : kind_(std::move(kind)), rows_(rows), cols_(cols) {}

  friend LinearOperator first_difference(std::size_t n);

  Kind kind_;
  std::size_t rows_;
  std::size_t cols_;
};

/// First-order finite-difference operator D, shape (n-1) x n. Requires n >= 2.
LinearOperator first_difference(std::size_t n);

}  // namespace bpinn
