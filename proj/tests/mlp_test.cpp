#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bpinn/errors.hpp"
#include "bpinn/losses.hpp"
#include "bpinn/mlp.hpp"
#include "test_support.hpp"

#include <cstring>

using namespace bpinn;
using namespace bpinn::testing;

namespace {

bool bitwise_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

MlpParameters random_params(const MlpArchitecture& arch, Rng& rng, double scale = 0.7) {
  return MlpParameters::unflatten(arch, random_vector(rng, arch.parameter_count(), scale));
}

}  // namespace

TEST_CASE("parameter count and flat layout") {
  const MlpArchitecture arch{{2, 3, 2}, Activation::kTanh};
  CHECK(arch.parameter_count() == 17);

  const auto zero = MlpParameters::unflatten(arch, Vector::Zero(17));
  for (const auto& layer : zero.layers()) {
    CHECK(layer.weights.isZero(0.0));
    CHECK(layer.bias.isZero(0.0));
  }

  // Row-major weights then bias, layer by layer.
  Vector flat(17);
  for (Eigen::Index k = 0; k < 17; ++k) flat[k] = static_cast<double>(k);
  const auto p = MlpParameters::unflatten(arch, flat);
  CHECK(p.layers()[0].weights(0, 1) == 1.0);
  CHECK(p.layers()[0].weights(1, 0) == 2.0);
  CHECK(p.layers()[0].bias[0] == 6.0);
  CHECK(p.layers()[1].weights(0, 0) == 9.0);
  CHECK(p.layers()[1].bias[1] == 16.0);

  CHECK_THROWS_AS(MlpParameters::unflatten(arch, Vector::Zero(16)), DimensionError);
}

TEST_CASE("property: flatten/unflatten is a bitwise bijection") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    MlpArchitecture arch;
    const auto depth = rng.uniform_int(2, 5);
    for (int l = 0; l < depth; ++l) arch.layer_sizes.push_back(static_cast<std::size_t>(rng.uniform_int(1, 9)));
    const Vector flat = random_vector(rng, arch.parameter_count(), 1e3);
    CHECK(bitwise_equal(MlpParameters::unflatten(arch, flat).flatten(), flat));
  }
}

TEST_CASE("architecture validation") {
  CHECK_THROWS_AS(MlpArchitecture{{3}}.validate(), ParameterError);
  CHECK_THROWS_AS((MlpArchitecture{{3, 0, 2}}.validate()), ParameterError);
  CHECK(activation_from_string("softplus") == Activation::kSoftplus);
  CHECK_THROWS_AS(activation_from_string("gelu"), ParameterError);
}

TEST_CASE("init_params") {
  const MlpArchitecture arch{{4, 4, 3}, Activation::kTanh};
  CHECK(bitwise_equal(init_params(arch, 99).flatten(), init_params(arch, 99).flatten()));
  CHECK(!bitwise_equal(init_params(arch, 99).flatten(), init_params(arch, 100).flatten()));

  const auto p = init_params(arch, 5);
  CHECK(p.layers()[0].weights.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 8.0));
  CHECK(p.layers()[0].bias.isZero(0.0));

  // 10^4 Glorot draws: sample mean within 3 standard errors of 0.
  const MlpArchitecture wide{{100, 100}, Activation::kTanh};
  const Vector w = init_params(wide, 7).layers()[0].weights.reshaped();
  const double bound = std::sqrt(6.0 / 200.0);
  const double sigma = bound / std::sqrt(3.0);
  CHECK(std::abs(w.mean()) <= 3.0 * sigma / 100.0);
  CHECK(w.cwiseAbs().maxCoeff() <= bound);
}

TEST_CASE("forward") {
  const MlpArchitecture arch{{3, 5, 2}, Activation::kTanh};
  const auto zero = MlpParameters::zeros(arch);
  CHECK(forward(zero, Vector::Ones(3)).output().isZero(0.0));

  const MlpArchitecture affine{{1, 1}, Activation::kTanh};
  Vector flat(2);
  flat << 2, 1;
  const auto trace = forward(MlpParameters::unflatten(affine, flat), Vector::Constant(1, 3.0));
  CHECK(trace.output()[0] == 7.0);

  Rng rng(3);
  const auto p = random_params(arch, rng);
  const Vector g = random_vector(rng, 3);
  CHECK(bitwise_equal(forward(p, g).output(), forward(p, g).output()));
  CHECK(forward(p, g).activations.size() == 3);
  CHECK_THROWS_AS(forward(p, Vector::Ones(2)), DimensionError);
}

TEST_CASE("backward") {
  Rng rng(4);
  const MlpArchitecture arch{{3, 4, 2}, Activation::kTanh};
  const auto p = random_params(arch, rng);
  const auto trace = forward(p, random_vector(rng, 3));
  CHECK(backward(p, trace, Vector::Zero(2)).isZero(0.0));
  CHECK_THROWS_AS(backward(p, trace, Vector::Zero(3)), DimensionError);

  const auto other = random_params(MlpArchitecture{{3, 2}, Activation::kTanh}, rng);
  CHECK_THROWS_AS(backward(other, trace, Vector::Zero(2)), DimensionError);
}

TEST_CASE("zero hidden layers: backward equals the least-squares gradient") {
  Rng rng(6);
  const MlpArchitecture arch{{4, 3}, Activation::kTanh};
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_params(arch, rng);
    const Vector g = random_vector(rng, 4);
    const Vector f_t = random_vector(rng, 3);
    const Matrix& w = p.layers()[0].weights;
    const Vector& b = p.layers()[0].bias;
    const Vector residual = f_t - w * g - b;
    const Matrix grad_w = -2.0 * residual * g.transpose();
    const Vector grad_b = -2.0 * residual;

    const auto trace = forward(p, g);
    const Vector grad = backward(p, trace, -2.0 * (f_t - trace.output()));
    Eigen::Index pos = 0;
    for (Eigen::Index r = 0; r < 3; ++r) {
      for (Eigen::Index c = 0; c < 4; ++c) CHECK(grad[pos++] == doctest::Approx(grad_w(r, c)).epsilon(1e-14));
    }
    for (Eigen::Index r = 0; r < 3; ++r) CHECK(grad[pos++] == doctest::Approx(grad_b[r]).epsilon(1e-14));
  }
}

TEST_CASE("finite_diff_grad") {
  const auto quadratic = [](const Vector& x) { return x.squaredNorm(); };
  Vector x(2);
  x << 1, 2;
  const Vector g = finite_diff_grad(quadratic, x, 1e-5);
  CHECK(std::abs(g[0] - 2.0) <= 1e-8);
  CHECK(std::abs(g[1] - 4.0) <= 1e-8);
  CHECK(finite_diff_grad([](const Vector&) { return 3.0; }, x, 1e-6).isZero(0.0));
  CHECK_THROWS_AS(finite_diff_grad(quadratic, x, 0.0), ParameterError);
}

TEST_CASE("property: backward agrees with finite differences for every activation") {
  const std::vector<std::vector<std::size_t>> shapes = {{3, 4}, {3, 5, 3}, {4, 8, 8, 4}};
  Rng rng(8);
  for (const auto act : {Activation::kTanh, Activation::kSoftplus, Activation::kRelu}) {
    for (const auto& shape : shapes) {
      const MlpArchitecture arch{shape, act};
      int checked = 0;
      while (checked < 10) {
        const auto p = random_params(arch, rng);
        const Vector g = random_vector(rng, arch.input_size());
        const Vector target = random_vector(rng, arch.output_size());
        const auto trace = forward(p, g);
        if (act == Activation::kRelu) {
          bool clear = true;
          for (std::size_t l = 0; l + 1 < trace.pre_activations.size(); ++l) {
            clear = clear && trace.pre_activations[l].cwiseAbs().minCoeff() > 1e-3;
          }
          if (!clear) continue;
        }
        const auto loss = [&](const Vector& flat) {
          return (target - forward(MlpParameters::unflatten(arch, flat), g).output()).squaredNorm();
        };
        const Vector analytic = backward(p, trace, -2.0 * (target - trace.output()));
        const Vector numeric = finite_diff_grad(loss, p.flatten(), 1e-6);
        CHECK(gradient_discrepancy(analytic, numeric) <= 1e-6);
        ++checked;
      }
    }
  }
}

TEST_CASE("supervised PINN loss gradient through a 6-8-4 tanh network") {
  Rng rng(10);
  const MlpArchitecture arch{{6, 8, 4}, Activation::kTanh};
  const auto h = LinearOperator::dense(random_matrix(rng, 6, 4));
  const auto weights = LossWeights::supervised(0.5, 0.3, 2.0);
  SupervisedBatch batch;
  for (int i = 0; i < 5; ++i) {
    batch.f.push_back(random_vector(rng, 4));
    batch.g.push_back(h.apply(batch.f.back()) + 0.1 * random_vector(rng, 6));
  }
  const Vector f_bar = random_vector(rng, 4, 0.2);
  const auto total = [&](const Vector& flat) {
    const auto p = MlpParameters::unflatten(arch, flat);
    VectorList out;
    for (const auto& g : batch.g) out.push_back(forward(p, g).output());
    return supervised_loss(out, batch, h, f_bar, weights).breakdown.total;
  };
  const auto p = random_params(arch, rng, 0.5);
  Vector grad = Vector::Zero(arch.parameter_count());
  VectorList out;
  std::vector<ForwardTrace> traces;
  for (const auto& g : batch.g) {
    traces.push_back(forward(p, g));
    out.push_back(traces.back().output());
  }
  const auto eval = supervised_loss(out, batch, h, f_bar, weights);
  for (std::size_t i = 0; i < traces.size(); ++i) grad += backward(p, traces[i], eval.grad_f[i]);
  CHECK(gradient_discrepancy(grad, finite_diff_grad(total, p.flatten(), 1e-6)) <= 1e-6);
}
