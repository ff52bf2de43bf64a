#include "bpinn/analytic.hpp"

#include "bpinn/errors.hpp"
#include "bpinn/linalg.hpp"

#include <cmath>
#include <string>

namespace bpinn {

using linalg::ExtMatrix;
using linalg::ExtVector;
using linalg::narrow;
using linalg::widen;

namespace {

void check_dims(const LinearOperator& h, const Vector& g, const Vector& mean) {
  if (static_cast<std::size_t>(g.size()) != h.rows()) {
    throw DimensionError("observation g", h.rows(), g.size());
  }
  if (static_cast<std::size_t>(mean.size()) != h.cols()) {
    throw DimensionError("prior mean", h.cols(), mean.size());
  }
}

// H'H + shift I, accumulated in extended precision from the materialized H.
ExtMatrix ext_gram(const ExtMatrix& h, long double shift) {
  ExtMatrix gram = h.transpose() * h;
  gram = (0.5L * (gram + gram.transpose())).eval();
  gram.diagonal().array() += shift;
  return gram;
}

}  // namespace

void GaussianPrior::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw ParameterError("prior variance must be positive and finite, got " +
                         std::to_string(variance));
  }
  if (!(extra_variance > 0.0)) {
    throw ParameterError("extra prior variance must be positive or +inf, got " +
                         std::to_string(extra_variance));
  }
}

void NoiseModel::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw ParameterError("noise variance must be positive and finite, got " +
                         std::to_string(variance));
  }
}

GaussianBelief posterior_linear_gaussian(const LinearOperator& h, const Vector& g,
                                         const NoiseModel& noise,
                                         const GaussianPrior& prior) {
  noise.validate();
  prior.validate();
  check_dims(h, g, prior.mean);

  const long double v_e = noise.variance;
  const long double lambda = v_e / static_cast<long double>(prior.variance);
  const ExtMatrix hm = widen(h.materialize());
  const ExtVector f_bar = widen(prior.mean);

  const auto factor = linalg::SpdFactor::factorize(ext_gram(hm, lambda));
  const ExtVector rhs = hm.transpose() * (widen(g) - hm * f_bar);
  const ExtVector mean = f_bar + factor.solve(rhs);
  const ExtMatrix cov = v_e * factor.inverse();

  return {narrow(mean), narrow(cov), static_cast<double>(lambda)};
}

GaussianBelief supervised_posterior(const LinearOperator& h, const Vector& g_t,
                                    const Vector& f_t, const NoiseModel& noise,
                                    const GaussianPrior& prior) {
  noise.validate();
  prior.validate();
  check_dims(h, g_t, prior.mean);
  if (static_cast<std::size_t>(f_t.size()) != h.cols()) {
    throw DimensionError("supervised label f_T", h.cols(), f_t.size());
  }

  const long double inv_e = 1.0L / noise.variance;
  const long double inv_f = 1.0L / prior.variance;
  const long double inv_i =
      std::isinf(prior.extra_variance) ? 0.0L : 1.0L / prior.extra_variance;

  const ExtMatrix hm = widen(h.materialize());
  ExtMatrix precision = inv_e * ext_gram(hm, 0.0L);
  precision.diagonal().array() += inv_f + inv_i;

  const auto factor = linalg::SpdFactor::factorize(precision);
  const ExtVector rhs = inv_f * widen(f_t) + inv_e * (hm.transpose() * widen(g_t)) +
                        inv_i * widen(prior.mean);
  return {narrow(factor.solve(rhs)), narrow(factor.inverse()),
          std::numeric_limits<double>::quiet_NaN()};
}

Vector supervised_energy_gradient(const LinearOperator& h, const Vector& g_t,
                                  const Vector& f_t, const NoiseModel& noise,
                                  const GaussianPrior& prior, const Vector& f) {
  const double inv_i =
      std::isinf(prior.extra_variance) ? 0.0 : 1.0 / prior.extra_variance;
  return -(f_t - f) / prior.variance - h.apply_adjoint(g_t - h.apply(f)) / noise.variance +
         inv_i * (f - prior.mean);
}

GaussianBelief conditioning_oracle(const LinearOperator& h, const Vector& g,
                                   const NoiseModel& noise, const GaussianPrior& prior) {
  noise.validate();
  prior.validate();
  check_dims(h, g, prior.mean);

  const long double v_f = prior.variance;
  const long double v_e = noise.variance;
  const ExtMatrix hm = widen(h.materialize());
  const auto n = hm.cols();
  const auto m = hm.rows();

  // Joint covariance blocks: cov(f,f) = v_f I, cov(f,g) = v_f H', cov(g,g) = v_f HH' + v_e I.
  const ExtMatrix cov_fg = v_f * hm.transpose();
  ExtMatrix cov_gg = v_f * (hm * hm.transpose());
  cov_gg.diagonal().array() += v_e;

  Eigen::FullPivLU<ExtMatrix> lu(cov_gg);
  if (lu.rank() < m) {
    throw ConditioningError("conditioning_oracle: observation covariance is singular",
                            static_cast<double>(lu.maxPivot() * lu.threshold()));
  }
  const ExtVector innovation = widen(g) - hm * widen(prior.mean);
  const ExtVector mean = widen(prior.mean) + cov_fg * lu.solve(innovation);
  const ExtMatrix gain = lu.solve(cov_fg.transpose());  // m x n
  ExtMatrix cov = v_f * ExtMatrix::Identity(n, n) - cov_fg * gain;
  cov = (0.5L * (cov + cov.transpose())).eval();

  return {narrow(mean), narrow(cov), static_cast<double>(v_e / v_f)};
}

double two_sided_normal_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw ParameterError("credible level must lie in (0, 1), got " + std::to_string(level));
  }
  // P(|Z| <= z) = erf(z / sqrt 2), increasing in z.
  double lo = 0.0;
  double hi = 40.0;
  while (hi - lo > 1e-14 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (std::erf(mid / std::sqrt(2.0)) < level) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<Interval> credible_interval(const GaussianBelief& belief, double level) {
  const double z = two_sided_normal_quantile(level);
  std::vector<Interval> out;
  out.reserve(belief.dim());
  for (Eigen::Index k = 0; k < belief.mean.size(); ++k) {
    const double half = z * std::sqrt(std::max(0.0, belief.covariance(k, k)));
    out.push_back({belief.mean[k] - half, belief.mean[k] + half});
  }
  return out;
}

}  // namespace bpinn
