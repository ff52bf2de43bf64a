#pragma once

// Shared generators and independent reference computations for the test suites.

#include "bpinn/operators.hpp"
#include "bpinn/rng.hpp"
#include "bpinn/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace bpinn::testing {

inline Vector random_vector(Rng& rng, std::size_t n, double scale = 1.0) {
  Vector v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

inline Matrix random_matrix(Rng& rng, std::size_t m, std::size_t n) {
  Matrix a(m, n);
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = rng.uniform(-1.0, 1.0);
  }
  return a;
}

/// Log-uniform draw in [lo, hi].
inline double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

enum class OpKind { kDense, kConvolution, kMask, kIdentity };
inline constexpr OpKind kAllKinds[] = {OpKind::kDense, OpKind::kConvolution, OpKind::kMask,
                                       OpKind::kIdentity};

/// Random operator of the given kind with n in [1, max_n]; dense gets m in [1, max_n].
inline LinearOperator random_operator(Rng& rng, OpKind kind, std::size_t max_n = 16) {
  const auto n = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_n)));
  switch (kind) {
    case OpKind::kDense: {
      const auto m =
          static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_n)));
      return LinearOperator::dense(random_matrix(rng, m, n));
    }
    case OpKind::kConvolution: {
      const auto len = static_cast<std::size_t>(rng.uniform_int(1, 5));
      Vector kernel(len);
      for (auto& k : kernel) k = rng.uniform(-1.0, 1.0);
      return LinearOperator::convolution(kernel, n);
    }
    case OpKind::kMask: {
      std::vector<std::size_t> all(n);
      std::iota(all.begin(), all.end(), std::size_t{0});
      for (std::size_t i = n; i > 1; --i) {
        std::swap(all[i - 1], all[static_cast<std::size_t>(
                                  rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
      }
      const auto m = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(n)));
      std::vector<std::size_t> kept(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m));
      std::sort(kept.begin(), kept.end());
      return LinearOperator::mask(kept, n);
    }
    case OpKind::kIdentity:
      return LinearOperator::identity(n);
  }
  return LinearOperator::identity(n);
}

// Gradient of the supervised energy from the materialized operator, kept apart
// from the library's implementation.
inline Vector energy_gradient(const Matrix& h, const Vector& g_t, const Vector& f_t,
                       const Vector& f_bar, double v_e, double v_f, double v_i,
                       const Vector& f) {
  Vector grad = (f - f_t) / v_f + h.transpose() * (h * f - g_t) / v_e;
  if (!std::isinf(v_i)) grad += (f - f_bar) / v_i;
  return grad;
}

/// "same" convolution through an explicit zero-padded full convolution:
/// full[k] = sum_j h_j x_{k-j}, output y_i = full[i + floor(len/2)].
inline Vector reference_convolution(const Vector& kernel, const Vector& x) {
  const auto len = kernel.size();
  const auto n = x.size();
  std::vector<double> full(static_cast<std::size_t>(n + len - 1), 0.0);
  for (Eigen::Index k = 0; k < n + len - 1; ++k) {
    for (Eigen::Index j = 0; j < len; ++j) {
      if (k - j >= 0 && k - j < n) full[static_cast<std::size_t>(k)] += kernel[j] * x[k - j];
    }
  }
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = full[static_cast<std::size_t>(i + len / 2)];
  return y;
}

inline double relative_error(const Vector& got, const Vector& want) {
  const double denom = std::max(want.norm(), 1e-300);
  return (got - want).norm() / denom;
}

/// Norm-wise relative discrepancy symmetric in its arguments.
inline double gradient_discrepancy(const Vector& a, const Vector& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-300});
  return (a - b).norm() / scale;
}

/// Central differences at fixed absolute step, written independently of the
/// library's finite_diff_grad.
template <class F>
Vector central_differences(F&& fn, const Vector& x, double rel_step = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = rel_step * std::max(1.0, std::abs(x[k]));
    Vector up = x;
    Vector down = x;
    up[k] += h;
    down[k] -= h;
    g[k] = (fn(up) - fn(down)) / (up[k] - down[k]);
  }
  return g;
}

}  // namespace bpinn::testing
