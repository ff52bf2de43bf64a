#pragma once

#include "bpinn/operators.hpp"
#include "bpinn/types.hpp"

#include <limits>
#include <vector>

namespace bpinn {

/// Isotropic Gaussian prior N(mean, variance I). `extra_variance` is the
/// second prior pull used by the supervised fusion; +inf switches it off.
struct GaussianPrior {
  Vector mean;
  double variance = 1.0;
  double extra_variance = std::numeric_limits<double>::infinity();

  void validate() const;
};

/// Isotropic observation noise N(0, variance I).
struct NoiseModel {
  double variance = 1.0;

  void validate() const;
};

struct GaussianBelief {
  Vector mean;
  Matrix covariance;
  /// Regularization ratio noise variance / prior variance (NaN when the
  /// belief did not come from a single-prior solve).
  double lambda = std::numeric_limits<double>::quiet_NaN();

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean.size()); }
};

/// Posterior of f given g = Hf + e, e ~ N(0, v_e I), f ~ N(f_bar, v_f I):
///
///   lambda = v_e / v_f
///   mean   = f_bar + (H'H + lambda I)^{-1} H'(g - H f_bar)
///   cov    = v_e (H'H + lambda I)^{-1}
///
/// Solved by Cholesky in extended precision; the mean never forms an inverse.
GaussianBelief posterior_linear_gaussian(const LinearOperator& h, const Vector& g,
                                         const NoiseModel& noise,
                                         const GaussianPrior& prior);

/// Minimizer of the per-sample supervised energy
///
///   J(f) = |f_T - f|^2/(2 v_f) + |g_T - Hf|^2/(2 v_e) + |f - f_bar|^2/(2 v_i)
///
/// returned as the Gaussian exp(-J): precision
/// A = (1/v_f + 1/v_i) I + H'H / v_e, mean A^{-1}[f_T/v_f + H'g_T/v_e + f_bar/v_i].
GaussianBelief supervised_posterior(const LinearOperator& h, const Vector& g_t,
                                    const Vector& f_t, const NoiseModel& noise,
                                    const GaussianPrior& prior);

/// Gradient of the supervised energy J above at f.
Vector supervised_energy_gradient(const LinearOperator& h, const Vector& g_t,
                                  const Vector& f_t, const NoiseModel& noise,
                                  const GaussianPrior& prior, const Vector& f);

/// Conditional of f given g from the joint Gaussian over (f, g), by block
/// elimination on the observation covariance v_f H H' + v_e I. Independent of
/// the normal-equation route; intended as a test oracle at small sizes.
GaussianBelief conditioning_oracle(const LinearOperator& h, const Vector& g,
                                   const NoiseModel& noise, const GaussianPrior& prior);

struct Interval {
  double lower;
  double upper;

  bool contains(double x) const noexcept { return lower <= x && x <= upper; }
};

/// z such that P(|Z| <= z) = level for standard normal Z, by bisection on erf.
double two_sided_normal_quantile(double level);

/// Per-component central credible intervals mean_k +- z sqrt(cov_kk).
std::vector<Interval> credible_interval(const GaussianBelief& belief, double level);

}  // namespace bpinn
