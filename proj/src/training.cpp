#include "bpinn/training.hpp"

#include "bpinn/rng.hpp"

#include <chrono>
#include <limits>
#include <cmath>
#include <numeric>
#include <sstream>

namespace bpinn {

namespace {

bool finite(const LossBreakdown& b) {
  return std::isfinite(b.j_nn) && std::isfinite(b.j_phys) && std::isfinite(b.j_prior_f) &&
         std::isfinite(b.j_sparse) && std::isfinite(b.j_weights) && std::isfinite(b.total);
}

std::string describe(const LossBreakdown& b) {
  std::ostringstream s;
  s << "j_nn=" << b.j_nn << " j_phys=" << b.j_phys << " j_prior_f=" << b.j_prior_f
    << " j_sparse=" << b.j_sparse << " j_weights=" << b.j_weights << " total=" << b.total;
  return s.str();
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

// Selects the records of `subset` (all when empty) and returns the data-term
// scale N / |subset|.
template <class Select>
double select_subset(const std::vector<std::size_t>& subset, std::size_t n, Select&& take) {
  if (subset.empty()) {
    for (std::size_t i = 0; i < n; ++i) take(i);
    return 1.0;
  }
  for (const auto i : subset) take(i);
  return static_cast<double>(n) / static_cast<double>(subset.size());
}

void scale_data_terms(LossEvaluation& eval, double scale) {
  if (scale == 1.0) return;
  auto& b = eval.breakdown;
  b.j_nn *= scale;
  b.j_phys *= scale;
  b.j_prior_f *= scale;
  b.j_sparse *= scale;
  for (auto& g : eval.grad_f) g *= scale;
}

// Backpropagates every per-sample output gradient and adds the weight prior.
FlatObjectiveValue accumulate(const MlpParameters& params, const Vector& flat,
                              const std::vector<ForwardTrace>& traces, LossEvaluation eval,
                              const LossWeights& weights) {
  Vector grad = Vector::Zero(flat.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    grad += backward(params, traces[i], eval.grad_f[i]);
  }
  const auto penalty = weight_penalty(flat, weights);
  eval.breakdown.j_weights = penalty.value;
  eval.breakdown.update_total();
  grad += penalty.gradient;
  return {eval.breakdown, std::move(grad)};
}

}  // namespace

OptimizerState OptimizerState::zeros(std::size_t size, AdamHyperparameters hyper) {
  return {Vector::Zero(size), Vector::Zero(size), 0, hyper};
}

AdamStep adam_step(const OptimizerState& state, const Vector& grad, const Vector& flat) {
  if (grad.size() != flat.size() || state.m.size() != flat.size() ||
      state.v.size() != flat.size()) {
    throw DimensionError("adam_step: gradient " + std::to_string(grad.size()) +
                         ", parameters " + std::to_string(flat.size()) + ", moments " +
                         std::to_string(state.m.size()));
  }
  const auto& h = state.hyper;
  AdamStep out{state, flat};
  auto& s = out.state;
  s.t += 1;
  s.m = h.beta1 * s.m + (1.0 - h.beta1) * grad;
  s.v = h.beta2 * s.v + (1.0 - h.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(s.t));
  for (Eigen::Index k = 0; k < flat.size(); ++k) {
    const double m_hat = s.m[k] / c1;
    const double v_hat = s.v[k] / c2;
    out.flat[k] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
  }
  return out;
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kMaxEpochs: return "max_epochs";
    case StopReason::kPlateau: return "plateau";
    case StopReason::kGradientNorm: return "gradient_norm";
  }
  return "unknown";
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ParameterError("epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  if (!(min_rel_improvement >= 0.0)) {
    throw ParameterError("min_rel_improvement must be nonnegative");
  }
  if (!(grad_tol >= 0.0)) throw ParameterError("grad_tol must be nonnegative");
  weights.validate();
}

double TrainConfig::learning_rate_at(std::size_t epoch) const {
  if (final_learning_rate <= 0.0 || epochs < 2) return learning_rate;
  const double frac = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
  return learning_rate * std::pow(final_learning_rate / learning_rate, frac);
}

DivergenceError::DivergenceError(std::size_t epoch, const LossBreakdown& breakdown)
    : Error(ErrorKind::kDivergence,
            "non-finite loss at epoch " + std::to_string(epoch) + ": " + describe(breakdown)),
      epoch_(epoch),
      breakdown_(breakdown) {}

OptimizationResult minimize(const FlatObjective& objective, Vector initial,
                            std::size_t sample_count, const TrainConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const bool full_batch = config.batch_size == 0 || config.batch_size >= sample_count;

  OptimizationResult result{initial, {}};
  TrainReport& report = result.report;
  Vector flat = std::move(initial);
  auto state = OptimizerState::zeros(static_cast<std::size_t>(flat.size()));
  Rng shuffler(derive_seed(config.seed, 0x5eed));
  std::vector<std::size_t> order = all_indices(sample_count);
  double best = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto value = objective(flat, {});
    if (!finite(value.breakdown) || !value.gradient.allFinite()) {
      throw DivergenceError(epoch, value.breakdown);
    }
    report.history.push_back(value.breakdown);
    if (config.snapshot_every > 0 && epoch % config.snapshot_every == 0) {
      report.snapshots.emplace(epoch, flat);
    }
    if (value.breakdown.total < best) {
      best = value.breakdown.total;
      result.best = flat;
      report.best_epoch = epoch;
    }
    report.best_total.push_back(best);
    report.final_grad_norm = value.gradient.norm();

    if (report.final_grad_norm < config.grad_tol) {
      report.stop_reason = StopReason::kGradientNorm;
      break;
    }
    if (config.min_rel_improvement > 0.0 && epoch >= config.patience) {
      const double before = report.best_total[epoch - config.patience];
      if (before - best < config.min_rel_improvement * std::abs(before)) {
        report.stop_reason = StopReason::kPlateau;
        break;
      }
    }

    state.hyper.learning_rate = config.learning_rate_at(epoch);
    if (full_batch) {
      auto step = adam_step(state, value.gradient, flat);
      state = std::move(step.state);
      flat = std::move(step.flat);
      continue;
    }
    for (std::size_t i = sample_count; i > 1; --i) {
      const auto j = static_cast<std::size_t>(
          shuffler.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t begin = 0; begin < sample_count; begin += config.batch_size) {
      const std::size_t end = std::min(sample_count, begin + config.batch_size);
      const std::vector<std::size_t> subset(order.begin() + begin, order.begin() + end);
      const auto mini = objective(flat, subset);
      if (!finite(mini.breakdown) || !mini.gradient.allFinite()) {
        throw DivergenceError(epoch, mini.breakdown);
      }
      auto step = adam_step(state, mini.gradient, flat);
      state = std::move(step.state);
      flat = std::move(step.flat);
    }
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

FlatObjective supervised_objective(const SupervisedBatch& data, const LinearOperator& h,
                                   const Vector& prior_mean, const MlpArchitecture& arch,
                                   const LossWeights& weights) {
  return [&data, &h, &prior_mean, arch, weights](const Vector& flat,
                                                  const std::vector<std::size_t>& subset) {
    const auto params = MlpParameters::unflatten(arch, flat);
    std::vector<ForwardTrace> traces;
    SupervisedBatch batch;
    VectorList outputs;
    const double scale = select_subset(subset, data.size(), [&](std::size_t i) {
      traces.push_back(forward(params, data.g[i]));
      outputs.push_back(traces.back().output());
      batch.g.push_back(data.g[i]);
      batch.f.push_back(data.f[i]);
    });
    auto eval = supervised_loss(outputs, batch, h, prior_mean, weights);
    scale_data_terms(eval, scale);
    return accumulate(params, flat, traces, std::move(eval), weights);
  };
}

FlatObjective unsupervised_objective(const UnsupervisedBatch& data, const LinearOperator& h,
                                     const LinearOperator& d, const MlpArchitecture& arch,
                                     const LossWeights& weights) {
  return [&data, &h, &d, arch, weights](const Vector& flat,
                                        const std::vector<std::size_t>& subset) {
    const auto params = MlpParameters::unflatten(arch, flat);
    std::vector<ForwardTrace> traces;
    UnsupervisedBatch batch;
    VectorList outputs;
    const double scale = select_subset(subset, data.size(), [&](std::size_t i) {
      traces.push_back(forward(params, data.g[i]));
      outputs.push_back(traces.back().output());
      batch.g.push_back(data.g[i]);
    });
    auto eval = unsupervised_loss(outputs, batch, h, d, weights);
    scale_data_terms(eval, scale);
    return accumulate(params, flat, traces, std::move(eval), weights);
  };
}

namespace {

void check_network_fits(const MlpArchitecture& arch, const LinearOperator& h,
                        std::size_t samples) {
  arch.validate();
  if (samples == 0) throw BatchError("training set is empty");
  if (arch.input_size() != h.rows()) {
    throw DimensionError("network input vs operator rows", h.rows(), arch.input_size());
  }
  if (arch.output_size() != h.cols()) {
    throw DimensionError("network output vs operator cols", h.cols(), arch.output_size());
  }
}

}  // namespace

TrainedModel train_supervised(const SupervisedBatch& data, const LinearOperator& h,
                              const Vector& prior_mean, const MlpArchitecture& arch,
                              const TrainConfig& config) {
  check_network_fits(arch, h, data.size());
  if (data.f.size() != data.g.size()) {
    throw BatchError("supervised data has " + std::to_string(data.g.size()) +
                     " observations and " + std::to_string(data.f.size()) + " labels");
  }
  auto objective = supervised_objective(data, h, prior_mean, arch, config.weights);
  auto result = minimize(objective, init_params(arch, config.seed).flatten(), data.size(),
                         config);
  return {MlpParameters::unflatten(arch, result.best), std::move(result.report)};
}

TrainedModel train_unsupervised(const UnsupervisedBatch& data, const LinearOperator& h,
                                const LinearOperator& d, const MlpArchitecture& arch,
                                const TrainConfig& config) {
  check_network_fits(arch, h, data.size());
  if (d.cols() != h.cols()) {
    throw DimensionError("regularization operator cols", h.cols(), d.cols());
  }
  auto objective = unsupervised_objective(data, h, d, arch, config.weights);
  auto result = minimize(objective, init_params(arch, config.seed).flatten(), data.size(),
                         config);
  return {MlpParameters::unflatten(arch, result.best), std::move(result.report)};
}

MapEstimate map_estimate_direct(const Vector& g, const LinearOperator& h,
                                const LinearOperator& d, const Vector& prior_mean,
                                const TrainConfig& config) {
  if (static_cast<std::size_t>(g.size()) != h.rows()) {
    throw DimensionError("map: observation", h.rows(), g.size());
  }
  if (static_cast<std::size_t>(prior_mean.size()) != h.cols()) {
    throw DimensionError("map: prior mean", h.cols(), prior_mean.size());
  }
  if (d.cols() != h.cols()) throw DimensionError("map: regularization operator", h.cols(), d.cols());

  const auto& w = config.weights;
  FlatObjective objective = [&](const Vector& f, const std::vector<std::size_t>&) {
    const Vector residual = g - h.apply(f);
    const auto prior = sparse_prior_energy(f - prior_mean, d, w);
    FlatObjectiveValue out;
    out.breakdown.j_phys = w.w_phys * residual.squaredNorm();
    out.breakdown.j_sparse = prior.value;
    out.breakdown.update_total();
    out.gradient = -2.0 * w.w_phys * h.apply_adjoint(residual) + prior.gradient;
    return out;
  };
  auto result = minimize(objective, prior_mean, 1, config);
  return {std::move(result.best), std::move(result.report)};
}

VectorList predict(const MlpParameters& params, const VectorList& inputs) {
  VectorList out;
  out.reserve(inputs.size());
  for (const auto& g : inputs) out.push_back(forward(params, g).output());
  return out;
}

EnsembleEstimate ensemble_uncertainty(
    const std::function<TrainedModel(const TrainConfig&)>& train_member,
    const VectorList& test_inputs, const TrainConfig& config, std::size_t members,
    std::uint64_t seed_stride) {
  if (members < 2) throw ParameterError("ensemble needs at least 2 members");
  EnsembleEstimate out;
  for (std::size_t k = 0; k < members; ++k) {
    TrainConfig member_config = config;
    member_config.seed = config.seed + k * seed_stride;
    try {
      out.members.push_back(predict(train_member(member_config).params, test_inputs));
    } catch (const Error& e) {
      throw Error(e.kind(), "ensemble member " + std::to_string(k) + ": " + e.what());
    }
  }
  const double count = static_cast<double>(members);
  for (std::size_t j = 0; j < test_inputs.size(); ++j) {
    // Shifted by the first member so identical members give exactly zero spread.
    const Vector& ref = out.members[0][j];
    Vector shift = Vector::Zero(ref.size());
    for (const auto& member : out.members) shift += member[j] - ref;
    shift /= count;
    Vector var = Vector::Zero(ref.size());
    for (const auto& member : out.members) var += (member[j] - ref - shift).cwiseAbs2();
    const Vector mean = ref + shift;
    out.mean.push_back(mean);
    out.stddev.push_back((var / (count - 1.0)).cwiseSqrt());
  }
  return out;
}

EnsembleEstimate ensemble_uncertainty(const SupervisedBatch& data, const LinearOperator& h,
                                      const Vector& prior_mean, const MlpArchitecture& arch,
                                      const TrainConfig& config, std::size_t members,
                                      const VectorList& test_inputs,
                                      std::uint64_t seed_stride) {
  return ensemble_uncertainty(
      [&](const TrainConfig& c) { return train_supervised(data, h, prior_mean, arch, c); },
      test_inputs, config, members, seed_stride);
}

EnsembleEstimate ensemble_uncertainty(const UnsupervisedBatch& data, const LinearOperator& h,
                                      const LinearOperator& d, const MlpArchitecture& arch,
                                      const TrainConfig& config, std::size_t members,
                                      const VectorList& test_inputs,
                                      std::uint64_t seed_stride) {
  return ensemble_uncertainty(
      [&](const TrainConfig& c) { return train_unsupervised(data, h, d, arch, c); },
      test_inputs, config, members, seed_stride);
}

}  // namespace bpinn
