#include "bpinn/losses.hpp"

#include "bpinn/errors.hpp"

#include <cmath>
#include <string>

namespace bpinn {

namespace {

void check_beta(double beta, const char* name) {
  if (!(beta > 0.0 && beta <= 2.0)) {
    throw ParameterError(std::string(name) + " must lie in (0, 2], got " +
                         std::to_string(beta));
  }
}

void check_batch(std::size_t outputs, std::size_t records) {
  if (outputs != records) {
    throw BatchError("batch size mismatch: " + std::to_string(outputs) +
                     " reconstructions for " + std::to_string(records) + " records");
  }
}

}  // namespace

LossWeights LossWeights::supervised(double v_f, double v_e, double v_i) {
  if (!(v_f > 0.0) || !(v_e > 0.0) || !(v_i > 0.0)) {
    throw ParameterError("loss variances must be positive");
  }
  LossWeights w;
  w.w_data = 1.0 / (2.0 * v_f);
  w.w_phys = 1.0 / (2.0 * v_e);
  w.w_prior = std::isinf(v_i) ? 0.0 : 1.0 / (2.0 * v_i);
  return w;
}

LossWeights LossWeights::unsupervised(double v_e, double gamma, double beta,
                                      double smooth_eps) {
  if (!(v_e > 0.0)) throw ParameterError("noise variance must be positive");
  LossWeights w;
  w.w_phys = 1.0 / v_e;
  w.gamma = gamma;
  w.beta = beta;
  w.smooth_eps = smooth_eps;
  return w;
}

void LossWeights::validate() const {
  const double values[] = {w_data, w_phys, w_prior, gamma, gamma_w, smooth_eps};
  for (const double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ParameterError("loss weights must be finite and nonnegative");
    }
  }
  check_beta(beta, "beta");
  check_beta(beta_w, "beta_w");
  if ((beta < 2.0 || beta_w < 2.0) && !(smooth_eps > 0.0)) {
    throw ParameterError("smooth_eps must be positive when beta or beta_w is below 2");
  }
}

double smoothed_power(const Vector& x, double beta, double eps) {
  check_beta(beta, "beta");
  if (!(eps >= 0.0)) throw ParameterError("smoothing epsilon must be nonnegative");
  const double eps2 = eps * eps;
  double sum = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double s = x[k] * x[k] + eps2;
    sum += beta == 2.0 ? s : std::pow(s, 0.5 * beta);
  }
  return sum;
}

Vector smoothed_power_gradient(const Vector& x, double beta, double eps) {
  check_beta(beta, "beta");
  if (beta < 2.0 && !(eps > 0.0)) {
    throw ParameterError("gradient of |x|^beta with beta < 2 needs smoothing eps > 0");
  }
  const double eps2 = eps * eps;
  Vector grad(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    grad[k] = beta == 2.0 ? 2.0 * x[k]
                          : beta * std::pow(x[k] * x[k] + eps2, 0.5 * beta - 1.0) * x[k];
  }
  return grad;
}

ScalarWithGradient sparse_prior_energy(const Vector& f, const LinearOperator& d,
                                       const LossWeights& weights) {
  const Vector df = d.apply(f);
  if (weights.gamma == 0.0) return {0.0, Vector::Zero(f.size())};
  return {weights.gamma * smoothed_power(df, weights.beta, weights.smooth_eps),
          weights.gamma *
              d.apply_adjoint(smoothed_power_gradient(df, weights.beta, weights.smooth_eps))};
}

LossEvaluation supervised_loss(const VectorList& f_nn, const SupervisedBatch& batch,
                               const LinearOperator& h, const Vector& prior_mean,
                               const LossWeights& weights) {
  check_batch(f_nn.size(), batch.g.size());
  check_batch(batch.f.size(), batch.g.size());
  if (static_cast<std::size_t>(prior_mean.size()) != h.cols()) {
    throw DimensionError("prior mean", h.cols(), prior_mean.size());
  }

  LossEvaluation out;
  out.grad_f.reserve(f_nn.size());
  for (std::size_t i = 0; i < f_nn.size(); ++i) {
    if (static_cast<std::size_t>(batch.f[i].size()) != h.cols()) {
      throw DimensionError("label f_T[" + std::to_string(i) + "]", h.cols(),
                           batch.f[i].size());
    }
    const Vector label_residual = batch.f[i] - f_nn[i];
    const Vector phys_residual = batch.g[i] - h.apply(f_nn[i]);
    const Vector prior_residual = prior_mean - f_nn[i];

    out.breakdown.j_nn += weights.w_data * label_residual.squaredNorm();
    out.breakdown.j_phys += weights.w_phys * phys_residual.squaredNorm();
    out.breakdown.j_prior_f += weights.w_prior * prior_residual.squaredNorm();
    out.grad_f.push_back(-2.0 * weights.w_data * label_residual -
                         2.0 * weights.w_phys * h.apply_adjoint(phys_residual) -
                         2.0 * weights.w_prior * prior_residual);
  }
  out.breakdown.update_total();
  return out;
}

LossEvaluation unsupervised_loss(const VectorList& f_nn, const UnsupervisedBatch& batch,
                                 const LinearOperator& h, const LinearOperator& d,
                                 const LossWeights& weights) {
  check_batch(f_nn.size(), batch.g.size());

  LossEvaluation out;
  out.grad_f.reserve(f_nn.size());
  for (std::size_t i = 0; i < f_nn.size(); ++i) {
    const Vector phys_residual = batch.g[i] - h.apply(f_nn[i]);
    const auto sparse = sparse_prior_energy(f_nn[i], d, weights);

    out.breakdown.j_phys += weights.w_phys * phys_residual.squaredNorm();
    out.breakdown.j_sparse += sparse.value;
    out.grad_f.push_back(-2.0 * weights.w_phys * h.apply_adjoint(phys_residual) +
                         sparse.gradient);
  }
  out.breakdown.update_total();
  return out;
}

ScalarWithGradient weight_penalty(const Vector& w_flat, const LossWeights& weights) {
  if (weights.gamma_w == 0.0) return {0.0, Vector::Zero(w_flat.size())};
  return {weights.gamma_w * smoothed_power(w_flat, weights.beta_w, weights.smooth_eps),
          weights.gamma_w *
              smoothed_power_gradient(w_flat, weights.beta_w, weights.smooth_eps)};
}

}  // namespace bpinn
