#pragma once

#include "bpinn/operators.hpp"
#include "bpinn/types.hpp"

namespace bpinn {

/// Weights of the training criteria. Supervised weights follow the 1/(2v)
/// convention so that the supervised loss at the closed-form minimizer equals
/// the Gaussian energy exactly.
struct LossWeights {
  double w_data = 0.0;   ///< 1/(2 v_f): label fidelity
  double w_phys = 0.0;   ///< physics misfit |g - H f|^2
  double w_prior = 0.0;  ///< 1/(2 v_i): pull toward the prior mean; 0 disables
  double gamma = 0.0;    ///< strength of gamma * |D f|_beta^beta
  double beta = 2.0;
  double gamma_w = 0.0;  ///< strength of gamma_w * |w|_beta_w^beta_w
  double beta_w = 2.0;
  double smooth_eps = 0.0;  ///< epsilon in (x^2 + eps^2)^(beta/2)

  /// w_data = 1/(2 v_f), w_phys = 1/(2 v_e), w_prior = 1/(2 v_i) (0 for v_i = inf).
  static LossWeights supervised(double v_f, double v_e, double v_i);
  /// w_phys = 1/v_e, matching the unsupervised criterion, which carries no 1/2.
  static LossWeights unsupervised(double v_e, double gamma, double beta, double smooth_eps);

  void validate() const;
  /// True when beta < 1 or beta_w < 1 (the penalty is then non-convex).
  bool non_convex() const noexcept { return beta < 1.0 || beta_w < 1.0; }
};

struct LossBreakdown {
  double j_nn = 0.0;
  double j_phys = 0.0;
  double j_prior_f = 0.0;
  double j_sparse = 0.0;
  double j_weights = 0.0;
  double total = 0.0;

  /// Physics-informed part: physics misfit plus prior pull.
  double j_pi() const noexcept { return j_phys + j_prior_f; }
  double component_sum() const noexcept {
    return j_nn + j_phys + j_prior_f + j_sparse + j_weights;
  }
  void update_total() noexcept { total = component_sum(); }
};

/// Loss value plus the gradient with respect to every reconstruction in the batch.
struct LossEvaluation {
  LossBreakdown breakdown;
  VectorList grad_f;
};

struct ScalarWithGradient {
  double value = 0.0;
  Vector gradient;
};

struct SupervisedBatch {
  VectorList g;
  VectorList f;

  std::size_t size() const noexcept { return g.size(); }
};

struct UnsupervisedBatch {
  VectorList g;

  std::size_t size() const noexcept { return g.size(); }
};

/// sum_k (x_k^2 + eps^2)^(beta/2); equals sum |x_k|^beta when eps = 0.
double smoothed_power(const Vector& x, double beta, double eps);
/// Gradient beta (x_k^2 + eps^2)^(beta/2 - 1) x_k. Needs eps > 0 when beta < 2.
Vector smoothed_power_gradient(const Vector& x, double beta, double eps);

/// gamma * smoothed_power(D f, beta, eps) and its gradient in f.
ScalarWithGradient sparse_prior_energy(const Vector& f, const LinearOperator& d,
                                       const LossWeights& weights);

/// Supervised PINN criterion over a batch of network outputs.
///   j_nn      = sum_i w_data  |f_Ti - f_i|^2
///   j_phys    = sum_i w_phys  |g_Ti - H f_i|^2
///   j_prior_f = sum_i w_prior |f_bar - f_i|^2
LossEvaluation supervised_loss(const VectorList& f_nn, const SupervisedBatch& batch,
                               const LinearOperator& h, const Vector& prior_mean,
                               const LossWeights& weights);

/// Unsupervised criterion: j_phys = sum_i w_phys |g_Ti - H f_i|^2 and
/// j_sparse = sum_i gamma |D f_i|_beta^beta. The weight prior is added by the trainer.
LossEvaluation unsupervised_loss(const VectorList& f_nn, const UnsupervisedBatch& batch,
                                 const LinearOperator& h, const LinearOperator& d,
                                 const LossWeights& weights);

/// gamma_w * smoothed_power(w, beta_w, eps).
ScalarWithGradient weight_penalty(const Vector& w_flat, const LossWeights& weights);

}  // namespace bpinn
