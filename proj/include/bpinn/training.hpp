#pragma once

#include "bpinn/errors.hpp"
#include "bpinn/losses.hpp"
#include "bpinn/mlp.hpp"
#include "bpinn/operators.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace bpinn {

struct AdamHyperparameters {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  Vector m;
  Vector v;
  std::int64_t t = 0;
  AdamHyperparameters hyper;

  static OptimizerState zeros(std::size_t size, AdamHyperparameters hyper = {});
};

struct AdamStep {
  OptimizerState state;
  Vector flat;
};

/// One bias-corrected Adam update:
///   m <- b1 m + (1-b1) g,   v <- b2 v + (1-b2) g^2,   t <- t + 1
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
AdamStep adam_step(const OptimizerState& state, const Vector& grad, const Vector& flat);

enum class StopReason { kMaxEpochs, kPlateau, kGradientNorm };
std::string to_string(StopReason reason);

struct TrainConfig {
  std::size_t epochs = 1000;
  /// 0 means full batch.
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
  LossWeights weights;
  double learning_rate = 1e-3;
  /// Step size reached at the last epoch by geometric decay; <= 0 keeps the
  /// step size constant.
  double final_learning_rate = 0.0;
  /// Stop when the best total loss improved by less than min_rel_improvement
  /// (relative) over the last `patience` epochs. min_rel_improvement = 0 disables.
  std::size_t patience = 50;
  double min_rel_improvement = 1e-9;
  double grad_tol = 1e-10;
  /// Store the flat parameters every k-th epoch (0: never).
  std::size_t snapshot_every = 0;

  void validate() const;
  double learning_rate_at(std::size_t epoch) const;
};

struct TrainReport {
  /// Breakdown evaluated at the parameters entering each epoch.
  std::vector<LossBreakdown> history;
  /// Running minimum of history[e].total.
  std::vector<double> best_total;
  /// epoch -> parameters at which history[epoch] was evaluated.
  std::map<std::size_t, Vector> snapshots;
  std::size_t best_epoch = 0;
  double final_grad_norm = 0.0;
  StopReason stop_reason = StopReason::kMaxEpochs;
  double wall_seconds = 0.0;
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, const LossBreakdown& breakdown);

  std::size_t epoch() const noexcept { return epoch_; }
  const LossBreakdown& breakdown() const noexcept { return breakdown_; }

 private:
  std::size_t epoch_;
  LossBreakdown breakdown_;
};

struct TrainedModel {
  MlpParameters params;
  TrainReport report;
};

/// Loss and flat gradient over the full training set (`subset` empty) or over
/// the given sample indices, scaled by N / |subset|.
struct FlatObjectiveValue {
  LossBreakdown breakdown;
  Vector gradient;
};
using FlatObjective =
    std::function<FlatObjectiveValue(const Vector& flat, const std::vector<std::size_t>& subset)>;

/// Runs Adam on `objective` from `initial`, returning the best parameters seen.
struct OptimizationResult {
  Vector best;
  TrainReport report;
};
OptimizationResult minimize(const FlatObjective& objective, Vector initial,
                            std::size_t sample_count, const TrainConfig& config);

/// Network objective for the supervised criterion plus the weight penalty.
/// The returned callable references `data`, `h` and `prior_mean`.
FlatObjective supervised_objective(const SupervisedBatch& data, const LinearOperator& h,
                                   const Vector& prior_mean, const MlpArchitecture& arch,
                                   const LossWeights& weights);

/// Network objective for the unsupervised criterion plus the weight penalty.
FlatObjective unsupervised_objective(const UnsupervisedBatch& data, const LinearOperator& h,
                                     const LinearOperator& d, const MlpArchitecture& arch,
                                     const LossWeights& weights);

/// MAP estimate of the network weights under the supervised criterion.
TrainedModel train_supervised(const SupervisedBatch& data, const LinearOperator& h,
                              const Vector& prior_mean, const MlpArchitecture& arch,
                              const TrainConfig& config);

/// MAP estimate of the network weights from observations alone.
TrainedModel train_unsupervised(const UnsupervisedBatch& data, const LinearOperator& h,
                                const LinearOperator& d, const MlpArchitecture& arch,
                                const TrainConfig& config);

struct MapEstimate {
  Vector f;
  TrainReport report;
};

/// Minimizes w_phys |g - H f|^2 + gamma * smoothed_power(D (f - prior_mean))
/// over f with the same optimizer, starting from prior_mean.
MapEstimate map_estimate_direct(const Vector& g, const LinearOperator& h,
                                const LinearOperator& d, const Vector& prior_mean,
                                const TrainConfig& config);

/// Seed-ensemble spread of network reconstructions. Heuristic: it measures
/// training variability, not a posterior over f.
struct EnsembleEstimate {
  VectorList mean;
  VectorList stddev;
  /// members[k][j]: reconstruction of test input j by member k.
  std::vector<VectorList> members;
};

/// Trains K members with seeds config.seed + k * seed_stride and evaluates
/// each on `test_inputs`.
EnsembleEstimate ensemble_uncertainty(
    const std::function<TrainedModel(const TrainConfig&)>& train_member,
    const VectorList& test_inputs, const TrainConfig& config, std::size_t members,
    std::uint64_t seed_stride = 1);

EnsembleEstimate ensemble_uncertainty(const SupervisedBatch& data, const LinearOperator& h,
                                      const Vector& prior_mean, const MlpArchitecture& arch,
                                      const TrainConfig& config, std::size_t members,
                                      const VectorList& test_inputs,
                                      std::uint64_t seed_stride = 1);

EnsembleEstimate ensemble_uncertainty(const UnsupervisedBatch& data, const LinearOperator& h,
                                      const LinearOperator& d, const MlpArchitecture& arch,
                                      const TrainConfig& config, std::size_t members,
                                      const VectorList& test_inputs,
                                      std::uint64_t seed_stride = 1);

/// Runs the network on every input.
VectorList predict(const MlpParameters& params, const VectorList& inputs);

}  // namespace bpinn
