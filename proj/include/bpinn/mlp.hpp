#pragma once

#include "bpinn/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace bpinn {

enum class Activation { kTanh, kRelu, kSoftplus };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Fully connected network [m, h_1, ..., h_L, n]; hidden layers use
/// `hidden_activation`, the output layer is affine.
struct MlpArchitecture {
  std::vector<std::size_t> layer_sizes;
  Activation hidden_activation = Activation::kTanh;

  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return layer_sizes.size() - 1; }
  /// sum over layers of d_l (d_{l-1} + 1).
  std::size_t parameter_count() const;
  void validate() const;

  bool operator==(const MlpArchitecture&) const = default;
};

struct DenseLayer {
  Matrix weights;  ///< d_out x d_in
  Vector bias;     ///< d_out
};

/// Network weights. The flat layout concatenates layers in order, each as its
/// weight matrix in row-major order followed by its bias.
class MlpParameters {
 public:
  static MlpParameters zeros(const MlpArchitecture& arch);
  static MlpParameters unflatten(const MlpArchitecture& arch, const Vector& flat);

  Vector flatten() const;

  const MlpArchitecture& architecture() const noexcept { return arch_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

 private:
  explicit MlpParameters(MlpArchitecture arch) : arch_(std::move(arch)) {}

  MlpArchitecture arch_;
  std::vector<DenseLayer> layers_;
};

/// Glorot-uniform weights in +-sqrt(6 / (d_in + d_out)) drawn from Rng(seed)
/// layer by layer in row-major order; zero biases.
MlpParameters init_params(const MlpArchitecture& arch, std::uint64_t seed);

/// Per-layer workspace of one forward pass. activations[0] is the input and
/// activations.back() the network output; pre_activations[l] feeds activations[l+1].
struct ForwardTrace {
  VectorList pre_activations;
  VectorList activations;

  const Vector& output() const { return activations.back(); }
};

ForwardTrace forward(const MlpParameters& params, const Vector& g);

/// Reverse-mode gradient of a scalar loss with respect to the flat
/// parameters, given dL/d(output) for the pass recorded in `trace`.
Vector backward(const MlpParameters& params, const ForwardTrace& trace,
                const Vector& dl_df);

/// Central differences with per-coordinate step h * max(1, |x_k|).
Vector finite_diff_grad(const std::function<double(const Vector&)>& loss_at,
                        const Vector& x, double h);

}  // namespace bpinn
