#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bpinn/analytic.hpp"
#include "bpinn/errors.hpp"
#include "bpinn/training.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace bpinn;
using namespace bpinn::testing;

namespace {

SupervisedBatch identity_batch(std::size_t n, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  SupervisedBatch batch;
  for (std::size_t i = 0; i < count; ++i) {
    batch.f.push_back(random_vector(rng, n));
    batch.g.push_back(batch.f.back());
  }
  return batch;
}

TrainConfig identity_config() {
  TrainConfig c;
  c.epochs = 5000;
  c.seed = 5;
  c.weights.w_data = 0.5;
  c.weights.w_phys = 0.5;
  return c;
}

double worst_relative_error(const VectorList& got, const VectorList& want) {
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, relative_error(got[i], want[i]));
  return worst;
}

// Piecewise-constant signals blurred by a short kernel.
struct BlurProblem {
  LinearOperator h = LinearOperator::identity(1);
  LinearOperator d = first_difference(2);
  VectorList f;
  UnsupervisedBatch data;
};

BlurProblem blur_problem(std::size_t n, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  Vector kernel(5);
  kernel << 1, 4, 6, 4, 1;
  BlurProblem p{LinearOperator::convolution(kernel / 16.0, n), first_difference(n), {}, {}};
  for (std::size_t s = 0; s < count; ++s) {
    Vector f(static_cast<Eigen::Index>(n));
    const auto cut = static_cast<Eigen::Index>(rng.uniform_int(4, static_cast<std::int64_t>(n) - 4));
    f.head(cut).setConstant(rng.uniform(-1.0, 1.0));
    f.tail(f.size() - cut).setConstant(rng.uniform(-1.0, 1.0));
    Vector g = p.h.apply(f);
    for (auto& x : g) x += 0.05 * rng.normal();
    p.f.push_back(f);
    p.data.g.push_back(g);
  }
  return p;
}

double mean_tv(const VectorList& list, const LinearOperator& d) {
  double sum = 0.0;
  for (const auto& f : list) sum += d.apply(f).lpNorm<1>();
  return sum / static_cast<double>(list.size());
}

}  // namespace

TEST_CASE("adam_step") {
  const auto state = OptimizerState::zeros(3);
  Vector g(3);
  g << 2.0, -1e-3, 1e-4;
  const AdamStep step = adam_step(state, g, Vector::Zero(3));
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(std::abs(step.flat[i] + 1e-3 * (g[i] > 0 ? 1.0 : -1.0)) <= 1e-3 * 1e-4);
  }
  CHECK(step.state.t == 1);
  CHECK((step.state.v.array() >= 0.0).all());

  AdamStep still{OptimizerState::zeros(2), Vector::Constant(2, 1.5)};
  for (int i = 0; i < 100; ++i) still = adam_step(still.state, Vector::Zero(2), still.flat);
  CHECK(still.flat == Vector::Constant(2, 1.5));

  // At the default step 1e-3 the iterate is still about 0.06 short after 5000
  // steps, so the tolerance check uses a step of 1e-2.
  AdamHyperparameters fast;
  fast.learning_rate = 1e-2;
  AdamStep q{OptimizerState::zeros(1, fast), Vector::Zero(1)};
  for (int i = 0; i < 5000; ++i) {
    q = adam_step(q.state, Vector::Constant(1, 2.0 * (q.flat[0] - 3.0)), q.flat);
  }
  CHECK(std::abs(q.flat[0] - 3.0) <= 1e-3);

  AdamStep slow{OptimizerState::zeros(1), Vector::Zero(1)};
  double gap = 3.0;
  for (int i = 0; i < 5000; ++i) {
    slow = adam_step(slow.state, Vector::Constant(1, 2.0 * (slow.flat[0] - 3.0)), slow.flat);
    CHECK(std::abs(slow.flat[0] - 3.0) < gap);
    gap = std::abs(slow.flat[0] - 3.0);
  }

  CHECK_THROWS_AS(adam_step(state, Vector::Zero(2), Vector::Zero(3)), DimensionError);
}

TEST_CASE("train_config validation") {
  TrainConfig c;
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = TrainConfig{};
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = TrainConfig{};
  c.learning_rate = 1e-2;
  c.final_learning_rate = 1e-4;
  c.epochs = 3;
  CHECK(c.learning_rate_at(0) == doctest::Approx(1e-2));
  CHECK(c.learning_rate_at(2) == doctest::Approx(1e-4));
}

TEST_CASE("supervised identity problem converges and is deterministic") {
  const auto batch = identity_batch(8, 32, 21);
  const MlpArchitecture arch{{8, 8}, Activation::kTanh};
  const auto config = identity_config();
  const TrainedModel a = train_supervised(batch, LinearOperator::identity(8), Vector::Zero(8), arch, config);
  CHECK(a.report.history.size() <= config.epochs);
  CHECK(worst_relative_error(predict(a.params, batch.g), batch.f) <= 1e-3);

  // Least-squares oracle: the zero-loss map is the identity.
  const DenseLayer& layer = a.params.layers().front();
  CHECK((layer.weights - Matrix::Identity(8, 8)).norm() <= 1e-3);
  CHECK(layer.bias.norm() <= 1e-3);

  for (std::size_t e = 1; e < a.report.best_total.size(); ++e) {
    CHECK(a.report.best_total[e] <= a.report.best_total[e - 1]);
  }

  const TrainedModel b = train_supervised(batch, LinearOperator::identity(8), Vector::Zero(8), arch, config);
  CHECK(a.params.flatten() == b.params.flatten());
  REQUIRE(a.report.history.size() == b.report.history.size());
  for (std::size_t e = 0; e < a.report.history.size(); ++e) {
    CHECK(a.report.history[e].total == b.report.history[e].total);
  }
}

TEST_CASE("weight penalty shrinks the trained parameters") {
  Rng rng(8);
  const auto h = LinearOperator::dense(random_matrix(rng, 5, 4));
  SupervisedBatch batch;
  for (int i = 0; i < 16; ++i) {
    batch.f.push_back(random_vector(rng, 4));
    batch.g.push_back(h.apply(batch.f.back()));
  }
  const MlpArchitecture arch{{5, 6, 4}, Activation::kTanh};
  auto run = [&](double gamma_w) {
    TrainConfig c;
    c.epochs = 400;
    c.seed = 17;
    c.weights.w_data = 1.0;
    c.weights.w_phys = 1.0;
    c.weights.w_prior = 1.0;
    c.weights.gamma_w = gamma_w;
    return train_supervised(batch, h, Vector::Zero(4), arch, c).params.flatten().norm();
  };
  CHECK(run(1e6) < run(0.0));
  CHECK(run(1e-1) <= run(1e-3));
}

TEST_CASE("non-finite loss raises a divergence error") {
  const auto batch = identity_batch(3, 4, 2);
  SupervisedBatch big{{}, batch.f};
  for (const auto& g : batch.g) big.g.push_back(100.0 * g);
  TrainConfig c;
  c.epochs = 10;
  c.weights.w_phys = 1e308;
  try {
    train_supervised(big, LinearOperator::identity(3), Vector::Zero(3), {{3, 3}, Activation::kTanh}, c);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() == 0);
    CHECK(!std::isfinite(e.breakdown().total));
  }
}

TEST_CASE("dimension and batch checks") {
  const auto batch = identity_batch(3, 4, 2);
  const TrainConfig c;
  CHECK_THROWS_AS(train_supervised(batch, LinearOperator::identity(4), Vector::Zero(4),
                                   {{3, 3}, Activation::kTanh}, c),
                  DimensionError);
  CHECK_THROWS_AS(train_supervised(SupervisedBatch{}, LinearOperator::identity(3), Vector::Zero(3),
                                   {{3, 3}, Activation::kTanh}, c),
                  BatchError);
  SupervisedBatch ragged = batch;
  ragged.f.pop_back();
  CHECK_THROWS_AS(train_supervised(ragged, LinearOperator::identity(3), Vector::Zero(3),
                                   {{3, 3}, Activation::kTanh}, c),
                  BatchError);
}

TEST_CASE("unsupervised identity problem drives the physics misfit to zero") {
  const auto sup = identity_batch(6, 16, 4);
  const UnsupervisedBatch batch{sup.g};
  TrainConfig c;
  c.epochs = 5000;
  c.learning_rate = 1e-2;
  c.final_learning_rate = 1e-5;
  c.min_rel_improvement = 0.0;
  c.weights.w_phys = 1.0;
  const TrainedModel m = train_unsupervised(batch, LinearOperator::identity(6), first_difference(6),
                                            {{6, 6}, Activation::kTanh}, c);
  double energy = 0.0;
  for (const auto& g : batch.g) energy += g.squaredNorm();
  CHECK(m.report.history.back().j_phys <= 1e-6 * energy);
  for (const auto& b : m.report.history) {
    CHECK(b.j_nn == 0.0);
    CHECK(b.j_prior_f == 0.0);
  }
}

TEST_CASE("total variation weight yields flatter unsupervised reconstructions") {
  const auto p = blur_problem(32, 16, 13);
  const MlpArchitecture arch{{32, 32}, Activation::kTanh};
  auto run = [&](double gamma) {
    TrainConfig c;
    c.epochs = 1500;
    c.seed = 3;
    c.learning_rate = 1e-2;
    c.final_learning_rate = 1e-4;
    c.weights.w_phys = 1.0 / 0.0025;
    c.weights.gamma = gamma;
    c.weights.beta = 1.0;
    c.weights.smooth_eps = 1e-3;
    const TrainedModel m = train_unsupervised(p.data, p.h, p.d, arch, c);
    return mean_tv(predict(m.params, p.data.g), p.d);
  };
  CHECK(run(10.0) < run(0.0));
}

TEST_CASE("map_estimate_direct matches the Gaussian posterior mean") {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const auto h = random_operator(rng, kAllKinds[trial % 4], 10);
    const auto n = static_cast<std::size_t>(h.cols());
    const double ve = log_uniform(rng, 1e-2, 1.0);
    const double vf = log_uniform(rng, 0.1, 10.0);
    const Vector g = random_vector(rng, static_cast<std::size_t>(h.rows()));
    const auto post = posterior_linear_gaussian(h, g, NoiseModel{ve}, GaussianPrior{Vector::Zero(n), vf});

    TrainConfig c;
    c.epochs = 20000;
    c.learning_rate = 3e-2;
    c.final_learning_rate = 1e-6;
    c.min_rel_improvement = 0.0;
    c.weights = LossWeights::unsupervised(ve, 1.0 / vf, 2.0, 0.0);
    const auto est = map_estimate_direct(g, h, LinearOperator::identity(n), Vector::Zero(n), c);
    CHECK(relative_error(est.f, post.mean) <= 1e-6);
  }
}

TEST_CASE("unregularized MAP inverts a square operator") {
  Rng rng(5);
  const Matrix a = Matrix::Identity(6, 6) + 0.2 * random_matrix(rng, 6, 6);
  const auto h = LinearOperator::dense(a);
  const Vector f = random_vector(rng, 6);
  const Vector g = h.apply(f);
  TrainConfig c;
  c.epochs = 20000;
  c.learning_rate = 3e-2;
  c.final_learning_rate = 1e-6;
  c.min_rel_improvement = 0.0;
  c.weights.w_phys = 1.0;
  const auto est = map_estimate_direct(g, h, LinearOperator::identity(6), Vector::Zero(6), c);
  CHECK((est.f - a.partialPivLu().solve(g)).norm() <= 1e-4);
}

TEST_CASE("ensemble spread") {
  const auto batch = identity_batch(4, 16, 30);
  const auto h = LinearOperator::identity(4);
  const MlpArchitecture arch{{4, 4}, Activation::kTanh};
  auto config = identity_config();

  const auto same = ensemble_uncertainty(batch, h, Vector::Zero(4), arch, config, 3, batch.g, 0);
  for (const auto& s : same.stddev) CHECK(s.maxCoeff() == 0.0);

  const auto single = train_supervised(batch, h, Vector::Zero(4), arch, config);
  double scale = 0.0;
  const auto pred = predict(single.params, batch.g);
  for (std::size_t i = 0; i < pred.size(); ++i) scale = std::max(scale, (pred[i] - batch.f[i]).cwiseAbs().maxCoeff());

  const auto ens = ensemble_uncertainty(batch, h, Vector::Zero(4), arch, config, 5, batch.g);
  double spread = 0.0;
  for (const auto& s : ens.stddev) spread = std::max(spread, s.maxCoeff());
  CHECK(spread <= 10.0 * scale);

  // Squared error of the mean never exceeds the worst member.
  double mean_err = 0.0;
  std::vector<double> member_err(ens.members.size(), 0.0);
  for (std::size_t j = 0; j < batch.g.size(); ++j) {
    mean_err += (ens.mean[j] - batch.f[j]).squaredNorm();
    for (std::size_t k = 0; k < ens.members.size(); ++k) {
      member_err[k] += (ens.members[k][j] - batch.f[j]).squaredNorm();
    }
  }
  CHECK(mean_err <= *std::max_element(member_err.begin(), member_err.end()));

  CHECK_THROWS_AS(ensemble_uncertainty(batch, h, Vector::Zero(4), arch, config, 1, batch.g), ParameterError);
}

TEST_CASE("logged losses are recomputable from snapshots") {
  Rng rng(41);
  const auto h = LinearOperator::dense(random_matrix(rng, 5, 4));
  SupervisedBatch batch;
  for (int i = 0; i < 8; ++i) {
    batch.f.push_back(random_vector(rng, 4));
    batch.g.push_back(h.apply(batch.f.back()) + 0.1 * random_vector(rng, 5));
  }
  const Vector prior_mean = random_vector(rng, 4);
  const MlpArchitecture arch{{5, 7, 4}, Activation::kTanh};
  TrainConfig c;
  c.epochs = 300;
  c.snapshot_every = 100;
  c.weights = LossWeights::supervised(1.0, 0.1, 2.0);
  c.weights.gamma_w = 1e-3;
  c.weights.beta_w = 1.0;
  c.weights.smooth_eps = 1e-4;
  const auto m = train_supervised(batch, h, prior_mean, arch, c);
  REQUIRE(m.report.snapshots.size() >= 3);
  for (const auto& [epoch, flat] : m.report.snapshots) {
    const auto params = MlpParameters::unflatten(arch, flat);
    auto eval = supervised_loss(predict(params, batch.g), batch, h, prior_mean, c.weights);
    const double penalty = weight_penalty(flat, c.weights).value;
    const LossBreakdown& logged = m.report.history.at(epoch);
    CHECK(eval.breakdown.j_nn == doctest::Approx(logged.j_nn).epsilon(1e-12));
    CHECK(eval.breakdown.j_pi() == doctest::Approx(logged.j_pi()).epsilon(1e-12));
    CHECK(penalty == doctest::Approx(logged.j_weights).epsilon(1e-12));
  }
  for (const auto& b : m.report.history) {
    CHECK(std::abs(b.component_sum() - b.total) <= 1e-12 * std::abs(b.total));
  }
}

TEST_CASE("minibatch option is deterministic") {
  const auto batch = identity_batch(4, 12, 6);
  TrainConfig c = identity_config();
  c.epochs = 50;
  c.batch_size = 5;
  const MlpArchitecture arch{{4, 4}, Activation::kTanh};
  const auto a = train_supervised(batch, LinearOperator::identity(4), Vector::Zero(4), arch, c);
  const auto b = train_supervised(batch, LinearOperator::identity(4), Vector::Zero(4), arch, c);
  CHECK(a.params.flatten() == b.params.flatten());
  CHECK(a.report.history.back().total < a.report.history.front().total);
}
