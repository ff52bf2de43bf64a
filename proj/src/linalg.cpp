#include "bpinn/linalg.hpp"

#include "bpinn/errors.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace bpinn::linalg {

namespace {

struct Attempt {
  std::optional<ExtMatrix> lower;
  long double smallest_pivot;
};

Attempt try_cholesky(const ExtMatrix& a, long double jitter) {
  const Eigen::Index n = a.rows();
  ExtMatrix l = ExtMatrix::Zero(n, n);
  long double smallest = std::numeric_limits<long double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j) {
    long double pivot = a(j, j) + jitter;
    for (Eigen::Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    smallest = std::min(smallest, pivot);
    if (!(pivot > 0.0L) || !std::isfinite(pivot)) return {std::nullopt, smallest};
    const long double d = std::sqrt(pivot);
    l(j, j) = d;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      long double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / d;
    }
  }
  return {std::move(l), smallest};
}

}  // namespace

SpdFactor SpdFactor::factorize(const ExtMatrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("factorize: square matrix", a.rows(), a.cols());
  }
  long double smallest = 0.0L;
  for (const long double jitter : kJitterLadder) {
    auto attempt = try_cholesky(a, jitter);
    if (attempt.lower) return SpdFactor(std::move(*attempt.lower), jitter);
    smallest = attempt.smallest_pivot;
  }
  std::ostringstream msg;
  msg << "Cholesky factorization failed after jitter " << kJitterLadder.back()
      << "; smallest pivot " << static_cast<double>(smallest);
  throw ConditioningError(msg.str(), static_cast<double>(smallest));
}

ExtVector SpdFactor::solve(const ExtVector& b) const {
  const auto l = lower_.triangularView<Eigen::Lower>();
  ExtVector y = l.solve(b);
  return l.transpose().solve(y);
}

ExtMatrix SpdFactor::solve(const ExtMatrix& b) const {
  const auto l = lower_.triangularView<Eigen::Lower>();
  ExtMatrix y = l.solve(b);
  return l.transpose().solve(y);
}

ExtMatrix SpdFactor::inverse() const {
  ExtMatrix inv = solve(ExtMatrix::Identity(lower_.rows(), lower_.cols()).eval());
  return (0.5L * (inv + inv.transpose())).eval();
}

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return m.size() == 0 || (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

bool cholesky_succeeds(const Matrix& m, double jitter) {
  Matrix shifted = m;
  shifted.diagonal().array() += jitter;
  Eigen::LLT<Matrix> llt(shifted);
  return llt.info() == Eigen::Success;
}

}  // namespace bpinn::linalg
