#include "bpinn/mlp.hpp"

#include "bpinn/errors.hpp"
#include "bpinn/rng.hpp"

#include <cmath>

namespace bpinn {

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kTanh: return std::tanh(z);
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    case Activation::kSoftplus: return z > 0.0 ? z + std::log1p(std::exp(-z))
                                               : std::log1p(std::exp(z));
  }
  return z;
}

double activate_derivative(Activation a, double z) {
  switch (a) {
    case Activation::kTanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::kSoftplus: return 1.0 / (1.0 + std::exp(-z));
  }
  return 1.0;
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kSoftplus: return "softplus";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "softplus") return Activation::kSoftplus;
  throw ParameterError("unknown activation '" + name + "'");
}

std::size_t MlpArchitecture::parameter_count() const {
  std::size_t count = 0;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
    count += layer_sizes[l] * (layer_sizes[l - 1] + 1);
  }
  return count;
}

void MlpArchitecture::validate() const {
  if (layer_sizes.size() < 2) {
    throw ParameterError("architecture needs at least input and output sizes");
  }
  for (const auto s : layer_sizes) {
    if (s < 1) throw ParameterError("layer sizes must be positive");
  }
}

MlpParameters MlpParameters::zeros(const MlpArchitecture& arch) {
  arch.validate();
  MlpParameters p(arch);
  for (std::size_t l = 1; l < arch.layer_sizes.size(); ++l) {
    const auto out = static_cast<Eigen::Index>(arch.layer_sizes[l]);
    const auto in = static_cast<Eigen::Index>(arch.layer_sizes[l - 1]);
    p.layers_.push_back({Matrix::Zero(out, in), Vector::Zero(out)});
  }
  return p;
}

MlpParameters MlpParameters::unflatten(const MlpArchitecture& arch, const Vector& flat) {
  MlpParameters p = zeros(arch);
  if (static_cast<std::size_t>(flat.size()) != arch.parameter_count()) {
    throw DimensionError("unflatten", arch.parameter_count(), flat.size());
  }
  Eigen::Index pos = 0;
  for (auto& layer : p.layers_) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = flat[pos++];
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = flat[pos++];
  }
  return p;
}

Vector MlpParameters::flatten() const {
  Vector flat(arch_.parameter_count());
  Eigen::Index pos = 0;
  for (const auto& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) flat[pos++] = layer.weights(r, c);
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) flat[pos++] = layer.bias[r];
  }
  return flat;
}

MlpParameters init_params(const MlpArchitecture& arch, std::uint64_t seed) {
  MlpParameters p = MlpParameters::zeros(arch);
  Rng rng(seed);
  for (auto& layer : p.layers()) {
    const double bound =
        std::sqrt(6.0 / static_cast<double>(layer.weights.rows() + layer.weights.cols()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        layer.weights(r, c) = rng.uniform(-bound, bound);
      }
    }
  }
  return p;
}

ForwardTrace forward(const MlpParameters& params, const Vector& g) {
  const auto& arch = params.architecture();
  if (static_cast<std::size_t>(g.size()) != arch.input_size()) {
    throw DimensionError("network input", arch.input_size(), g.size());
  }
  ForwardTrace trace;
  trace.activations.reserve(arch.num_layers() + 1);
  trace.pre_activations.reserve(arch.num_layers());
  trace.activations.push_back(g);
  const auto& layers = params.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Vector z = layers[l].weights * trace.activations.back() + layers[l].bias;
    Vector a = z;
    if (l + 1 < layers.size()) {
      for (Eigen::Index k = 0; k < a.size(); ++k) a[k] = activate(arch.hidden_activation, z[k]);
    }
    trace.pre_activations.push_back(std::move(z));
    trace.activations.push_back(std::move(a));
  }
  return trace;
}

Vector backward(const MlpParameters& params, const ForwardTrace& trace,
                const Vector& dl_df) {
  const auto& arch = params.architecture();
  const auto& layers = params.layers();
  if (trace.activations.size() != layers.size() + 1 ||
      trace.pre_activations.size() != layers.size()) {
    throw DimensionError("backward: trace has " +
                         std::to_string(trace.pre_activations.size()) +
                         " layers, parameters have " + std::to_string(layers.size()));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (trace.activations[l].size() != layers[l].weights.cols() ||
        trace.pre_activations[l].size() != layers[l].weights.rows()) {
      throw DimensionError("backward: trace does not match parameters at layer " +
                           std::to_string(l));
    }
  }
  if (static_cast<std::size_t>(dl_df.size()) != arch.output_size()) {
    throw DimensionError("backward: upstream gradient", arch.output_size(), dl_df.size());
  }

  // Offsets of each layer's block within the flat layout.
  std::vector<Eigen::Index> offset(layers.size());
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    offset[l] = pos;
    pos += layers[l].weights.size() + layers[l].bias.size();
  }

  Vector grad(pos);
  Vector delta = dl_df;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Vector& input = trace.activations[l];
    const Matrix& w = layers[l].weights;
    Eigen::Index p = offset[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) grad[p++] = delta[r] * input[c];
    }
    for (Eigen::Index r = 0; r < w.rows(); ++r) grad[p++] = delta[r];
    if (l == 0) break;
    Vector upstream = w.transpose() * delta;
    const Vector& z = trace.pre_activations[l - 1];
    for (Eigen::Index k = 0; k < upstream.size(); ++k) {
      upstream[k] *= activate_derivative(arch.hidden_activation, z[k]);
    }
    delta = std::move(upstream);
  }
  return grad;
}

Vector finite_diff_grad(const std::function<double(const Vector&)>& loss_at,
                        const Vector& x, double h) {
  if (!(h > 0.0)) throw ParameterError("finite difference step must be positive");
  Vector grad(x.size());
  Vector probe = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double step = h * std::max(1.0, std::abs(x[k]));
    const double plus = x[k] + step;
    const double minus = x[k] - step;
    probe[k] = plus;
    const double up = loss_at(probe);
    probe[k] = minus;
    const double down = loss_at(probe);
    probe[k] = x[k];
    // Divide by the representable spacing, not 2 * step.
    grad[k] = (up - down) / (plus - minus);
  }
  return grad;
}

}  // namespace bpinn
