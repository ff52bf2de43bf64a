#pragma once

#include "bpinn/harness/io.hpp"
#include "bpinn/losses.hpp"
#include "bpinn/mlp.hpp"
#include "bpinn/operators.hpp"
#include "bpinn/training.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bpinn::harness {

enum class Mode { kSupervised, kUnsupervised };
std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

struct OperatorSpec {
  /// dense | convolution | mask | identity
  std::string kind = "identity";
  /// dense: explicit matrix, or random uniform(-1, 1) entries when absent.
  std::optional<Matrix> matrix;
  /// dense (random) and mask (random subset): number of rows.
  std::optional<std::size_t> rows;
  /// convolution: explicit kernel, or a normalized Gaussian blur.
  std::optional<Vector> kernel;
  double blur_sigma = 0.0;
  std::size_t blur_radius = 0;
  /// mask: explicit kept indices.
  std::optional<std::vector<std::size_t>> keep;
};

struct NoiseSpec {
  /// Exactly one of the two is set. A variance of 0 is allowed for generation only.
  std::optional<double> variance;
  std::optional<double> snr_db;
};

enum class PriorFamily { kGaussian, kPiecewiseConstant };

struct PriorSpec {
  PriorFamily family = PriorFamily::kGaussian;
  Vector mean;  ///< length n; zero for piecewise-constant
  double variance = 1.0;
  double extra_variance = std::numeric_limits<double>::infinity();
  std::size_t segments_min = 2;
  std::size_t segments_max = 4;
  double amplitude_lo = -1.0;
  double amplitude_hi = 1.0;
};

struct LossSpec {
  double w_data = 0.5;
  /// Physics weight; when absent it is 1/(2 v_e) for supervised training and
  /// 1/v_e for unsupervised training and the direct MAP estimate.
  std::optional<double> w_phys;
  double w_prior = 0.0;
  double gamma = 0.0;
  double beta = 2.0;
  double gamma_w = 0.0;
  double beta_w = 2.0;
  double smooth_eps = 0.0;
};

struct OptimizerSpec {
  std::size_t epochs = 1000;
  double learning_rate = 1e-3;
  double final_learning_rate = 0.0;
  std::size_t batch_size = 0;
  std::size_t patience = 50;
  double min_rel_improvement = 1e-9;
  double grad_tol = 1e-10;
  std::size_t snapshot_every = 0;
};

/// One experiment: generative model, dataset sizes, criteria and optimizer
/// settings. The canonical JSON of the fully defaulted spec identifies a run.
struct ProblemSpec {
  std::string name = "unnamed";
  std::uint64_t seed = 0;
  std::size_t n = 1;
  OperatorSpec op;
  NoiseSpec noise;
  PriorSpec prior;
  std::size_t train_count = 1;
  std::size_t test_count = 1;
  LossSpec loss;
  /// difference | identity
  std::string regularizer = "difference";
  std::vector<std::size_t> hidden;
  Activation activation = Activation::kTanh;
  OptimizerSpec train;
  OptimizerSpec map;
  std::size_t ensemble_members = 0;

  static ProblemSpec from_json(const Json& j);
  Json to_json() const;
  std::string hash() const;
  /// Number of observations m implied by the operator section.
  std::size_t observation_size() const;
};

/// Default optimizer settings of the `map` section.
OptimizerSpec default_map_optimizer();

LinearOperator build_operator(const ProblemSpec& spec);
LinearOperator build_regularizer(const ProblemSpec& spec);
MlpArchitecture build_architecture(const ProblemSpec& spec);

/// Loss weights for the given criterion; `noise_variance` resolves the
/// default physics weight.
LossWeights loss_weights(const ProblemSpec& spec, Mode mode, double noise_variance);
LossWeights map_loss_weights(const ProblemSpec& spec, double noise_variance);

TrainConfig train_config(const ProblemSpec& spec, Mode mode, double noise_variance);
TrainConfig map_config(const ProblemSpec& spec, double noise_variance);

}  // namespace bpinn::harness
