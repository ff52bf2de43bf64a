#pragma once

#include "bpinn/types.hpp"

#include <array>

namespace bpinn::linalg {

/// Extended-precision dense types. The closed-form posteriors accumulate in
/// long double and round once on output; see SpdFactor.
using ExtMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using ExtVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

/// Diagonal jitter tried in order before a factorization is declared failed.
inline constexpr std::array<long double, 3> kJitterLadder = {0.0L, 1e-12L, 1e-10L};

/// Cholesky factor L (A = L L') of a symmetric positive-definite matrix.
class SpdFactor {
 public:
  /// Factorizes `a` (lower triangle is read). Walks kJitterLadder and throws
  /// ConditioningError carrying the smallest pivot seen on the last attempt.
  static SpdFactor factorize(const ExtMatrix& a);

  ExtVector solve(const ExtVector& b) const;
  ExtMatrix solve(const ExtMatrix& b) const;
  /// A^{-1}, symmetrized.
  ExtMatrix inverse() const;

  long double jitter() const noexcept { return jitter_; }
  const ExtMatrix& lower() const noexcept { return lower_; }

 private:
  SpdFactor(ExtMatrix lower, long double jitter)
      : lower_(std::move(lower)), jitter_(jitter) {}

  ExtMatrix lower_;
  long double jitter_;
};

inline ExtMatrix widen(const Matrix& m) { return m.cast<long double>(); }
inline ExtVector widen(const Vector& v) { return v.cast<long double>(); }
inline Matrix narrow(const ExtMatrix& m) { return m.cast<double>(); }
inline Vector narrow(const ExtVector& v) { return v.cast<double>(); }

/// True when `m` is symmetric within `tol` (max absolute asymmetry).
bool is_symmetric(const Matrix& m, double tol);

/// Cholesky-success PSD probe in double precision with the given jitter.
bool cholesky_succeeds(const Matrix& m, double jitter);

}  // namespace bpinn::linalg
