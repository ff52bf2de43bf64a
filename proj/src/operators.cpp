#include "bpinn/operators.hpp"

#include "bpinn/errors.hpp"

#include <algorithm>

namespace bpinn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Visits every (output, input, coefficient) triple of a convolution, so apply
// and adjoint share one index walk.
template <class F>
void for_each_tap(const LinearOperator::Convolution1D& c, F&& visit) {
  const auto len = static_cast<std::ptrdiff_t>(c.kernel.size());
  const auto n = static_cast<std::ptrdiff_t>(c.n);
  const std::ptrdiff_t centre = len / 2;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (std::ptrdiff_t k = 0; k < len; ++k) {
      const std::ptrdiff_t j = i + centre - k;
      if (j >= 0 && j < n) visit(i, j, c.kernel[k]);
    }
  }
}

}  // namespace

LinearOperator LinearOperator::dense(Matrix matrix) {
  if (matrix.rows() < 1 || matrix.cols() < 1) {
    throw ParameterError("dense operator needs at least one row and column");
  }
  const auto m = static_cast<std::size_t>(matrix.rows());
  const auto n = static_cast<std::size_t>(matrix.cols());
  return LinearOperator(Dense{std::move(matrix)}, m, n);
}

LinearOperator LinearOperator::convolution(Vector kernel, std::size_t n) {
  if (kernel.size() < 1) throw ParameterError("convolution kernel is empty");
  if (n < 1) throw ParameterError("convolution length must be positive");
  return LinearOperator(Convolution1D{std::move(kernel), n}, n, n);
}

LinearOperator LinearOperator::mask(std::vector<std::size_t> kept, std::size_t n) {
  if (kept.empty()) throw ParameterError("mask keeps no indices");
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (kept[k] >= n) {
      throw ParameterError("mask index " + std::to_string(kept[k]) +
                           " out of range for length " + std::to_string(n));
    }
    if (k > 0 && kept[k] <= kept[k - 1]) {
      throw ParameterError("mask indices must be strictly increasing");
    }
  }
  const std::size_t m = kept.size();
  return LinearOperator(Mask{std::move(kept), n}, m, n);
}

LinearOperator LinearOperator::identity(std::size_t n) {
  if (n < 1) throw ParameterError("identity size must be positive");
  return LinearOperator(Identity{n}, n, n);
}

LinearOperator first_difference(std::size_t n) {
  if (n < 2) {
    throw ParameterError("first difference needs n >= 2, got " + std::to_string(n));
  }
  return LinearOperator(LinearOperator::FirstDifference{n}, n - 1, n);
}

std::string LinearOperator::kind_name() const {
  return std::visit(Overloaded{
                        [](const Dense&) { return std::string("dense"); },
                        [](const Convolution1D&) { return std::string("convolution"); },
                        [](const Mask&) { return std::string("mask"); },
                        [](const Identity&) { return std::string("identity"); },
                        [](const FirstDifference&) { return std::string("difference"); },
                    },
                    kind_);
}

Vector LinearOperator::apply(const Vector& f) const {
  if (static_cast<std::size_t>(f.size()) != cols_) {
    throw DimensionError("apply (" + kind_name() + ")", cols_, f.size());
  }
  return std::visit(
      Overloaded{
          [&](const Dense& d) -> Vector { return d.matrix * f; },
          [&](const Convolution1D& c) -> Vector {
            Vector y = Vector::Zero(c.n);
            for_each_tap(c, [&](auto i, auto j, double h) { y[i] += h * f[j]; });
            return y;
          },
          [&](const Mask& mk) -> Vector {
            Vector y(mk.kept.size());
            for (std::size_t k = 0; k < mk.kept.size(); ++k) y[k] = f[mk.kept[k]];
            return y;
          },
          [&](const Identity&) -> Vector { return f; },
          [&](const FirstDifference& d) -> Vector {
            const auto n = static_cast<Eigen::Index>(d.n);
            return f.tail(n - 1) - f.head(n - 1);
          },
      },
      kind_);
}

Vector LinearOperator::apply_adjoint(const Vector& g) const {
  if (static_cast<std::size_t>(g.size()) != rows_) {
    throw DimensionError("apply_adjoint (" + kind_name() + ")", rows_, g.size());
  }
  return std::visit(
      Overloaded{
          [&](const Dense& d) -> Vector { return d.matrix.transpose() * g; },
          [&](const Convolution1D& c) -> Vector {
            Vector x = Vector::Zero(c.n);
            for_each_tap(c, [&](auto i, auto j, double h) { x[j] += h * g[i]; });
            return x;
          },
          [&](const Mask& mk) -> Vector {
            Vector x = Vector::Zero(mk.n);
            for (std::size_t k = 0; k < mk.kept.size(); ++k) x[mk.kept[k]] = g[k];
            return x;
          },
          [&](const Identity&) -> Vector { return g; },
          [&](const FirstDifference& d) -> Vector {
            const auto n = static_cast<Eigen::Index>(d.n);
            Vector x = Vector::Zero(n);
            x.tail(n - 1) += g;
            x.head(n - 1) -= g;
            return x;
          },
      },
      kind_);
}

Matrix LinearOperator::materialize() const {
  if (const auto* d = std::get_if<Dense>(&kind_)) return d->matrix;
  Matrix out(rows_, cols_);
  Vector e = Vector::Zero(cols_);
  for (std::size_t j = 0; j < cols_; ++j) {
    e[j] = 1.0;
    out.col(j) = apply(e);
    e[j] = 0.0;
  }
  return out;
}

Matrix LinearOperator::gram_regularized(double lambda) const {
  if (!(lambda >= 0.0)) {
    throw ParameterError("gram_regularized: lambda must be nonnegative, got " +
                         std::to_string(lambda));
  }
  const Matrix h = materialize();
  const auto n = static_cast<Eigen::Index>(cols_);
  Matrix gram = Matrix::Zero(n, n);
  // Fill the lower triangle once and mirror it so the result is exactly symmetric.
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) gram(i, j) = h.col(i).dot(h.col(j));
  }
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  gram.diagonal().array() += lambda;
  return gram;
}

}  // namespace bpinn
