#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "viscal/errors.hpp"
#include "viscal/mlp.hpp"
#include "viscal/rng.hpp"

using namespace viscal;

namespace {

MlpParams zero_params(const MlpArchitecture& arch) {
  MlpParams p = mlp_init(arch, 0, 0.5);
  for (auto& w : p.weights) w.setZero();
  for (auto& b : p.biases) b.setZero();
  return p;
}

OrdinalData random_batch(const MlpArchitecture& arch, int n,
                         std::uint64_t seed) {
  Rng rng(seed);
  OrdinalData d;
  d.n_classes = arch.output_dim;
  d.x.resize(n, arch.input_dim);
  d.y.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < arch.input_dim; ++j) d.x(i, j) = rng.uniform(-1.0, 1.0);
    d.y[static_cast<std::size_t>(i)] =
        1 + static_cast<int>(rng.below(
                static_cast<std::uint64_t>(arch.output_dim)));
  }
  return d;
}

}  // namespace

TEST_CASE("zero weights output the uniform distribution") {
  MlpArchitecture arch;
  arch.input_dim = 9;
  const MlpParams p = zero_params(arch);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(9, 0.3);
  const Eigen::VectorXd out = mlp_forward(p, x);
  REQUIRE(out.size() == 84);
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    CHECK(out[k] == doctest::Approx(1.0 / 84.0).epsilon(1e-12));
  }

  OrdinalData batch = random_batch(arch, 5, 3);
  const MlpLossGrad lg = mlp_loss_grad(p, batch);
  CHECK(lg.loss == doctest::Approx(std::log(84.0)).epsilon(1e-12));
}

TEST_CASE("forward pass always yields a strict distribution") {
  MlpArchitecture arch;
  arch.input_dim = 4;
  arch.hidden = {7, 5};
  arch.output_dim = 12;
  Rng rng(77);
  for (int rep = 0; rep < 20; ++rep) {
    const MlpParams p = mlp_init(arch, 1000 + static_cast<std::uint64_t>(rep),
                                 2.0);
    Eigen::VectorXd x(4);
    for (int j = 0; j < 4; ++j) x[j] = rng.uniform(-3.0, 3.0);
    const Eigen::VectorXd out = mlp_forward(p, x);
    double total = 0.0;
    for (Eigen::Index k = 0; k < out.size(); ++k) {
      CHECK(out[k] > 0.0);
      total += out[k];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("shifting every output bias by a constant changes nothing") {
  MlpArchitecture arch;
  arch.input_dim = 3;
  arch.hidden = {6, 4};
  arch.output_dim = 9;
  MlpParams p = mlp_init(arch, 42, 0.7);
  Eigen::VectorXd x(3);
  x << 0.2, -0.8, 1.4;
  const Eigen::VectorXd base = mlp_forward(p, x);
  p.biases.back().array() += 3.7;
  const Eigen::VectorXd shifted = mlp_forward(p, x);
  for (Eigen::Index k = 0; k < base.size(); ++k) {
    CHECK(shifted[k] == doctest::Approx(base[k]).epsilon(1e-12));
  }
}

TEST_CASE("backpropagation matches central finite differences") {
  MlpArchitecture arch;
  arch.input_dim = 3;
  arch.hidden = {5, 4};
  arch.output_dim = 6;
  MlpParams p = mlp_init(arch, 9, 0.6);
  const OrdinalData batch = random_batch(arch, 3, 21);

  const MlpLossGrad lg = mlp_loss_grad(p, batch);
  const double eps = 1e-6;
  double worst = 0.0;

  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    for (Eigen::Index r = 0; r < p.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights[l].cols(); ++c) {
        MlpParams pp = p, pm = p;
        pp.weights[l](r, c) += eps;
        pm.weights[l](r, c) -= eps;
        const double fd =
            (mlp_loss_grad(pp, batch).loss - mlp_loss_grad(pm, batch).loss) /
            (2.0 * eps);
        worst = std::max(worst, std::abs(lg.grad.weights[l](r, c) - fd) /
                                    std::max(1.0, std::abs(fd)));
      }
    }
    for (Eigen::Index r = 0; r < p.biases[l].size(); ++r) {
      MlpParams pp = p, pm = p;
      pp.biases[l][r] += eps;
      pm.biases[l][r] -= eps;
      const double fd =
          (mlp_loss_grad(pp, batch).loss - mlp_loss_grad(pm, batch).loss) /
          (2.0 * eps);
      worst = std::max(worst, std::abs(lg.grad.biases[l][r] - fd) /
                                  std::max(1.0, std::abs(fd)));
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("duplicating the batch leaves mean loss and gradients unchanged") {
  MlpArchitecture arch;
  arch.input_dim = 4;
  arch.hidden = {6};
  arch.output_dim = 8;
  const MlpParams p = mlp_init(arch, 5, 0.5);
  const OrdinalData batch = random_batch(arch, 7, 31);

  OrdinalData doubled;
  doubled.n_classes = batch.n_classes;
  doubled.x.resize(14, 4);
  doubled.x << batch.x, batch.x;
  doubled.y = batch.y;
  doubled.y.insert(doubled.y.end(), batch.y.begin(), batch.y.end());

  const MlpLossGrad one = mlp_loss_grad(p, batch);
  const MlpLossGrad two = mlp_loss_grad(p, doubled);
  CHECK(two.loss == doctest::Approx(one.loss).epsilon(1e-13));
  for (std::size_t l = 0; l < one.grad.weights.size(); ++l) {
    CHECK((one.grad.weights[l] - two.grad.weights[l]).lpNorm<Eigen::Infinity>() <
          1e-13);
    CHECK((one.grad.biases[l] - two.grad.biases[l]).lpNorm<Eigen::Infinity>() <
          1e-13);
  }
}

TEST_CASE("a separable toy problem trains to low loss") {
  MlpArchitecture arch;
  arch.input_dim = 2;
  arch.hidden = {25, 25};
  arch.output_dim = 2;
  OrdinalData d;
  d.n_classes = 2;
  d.x.resize(40, 2);
  d.y.resize(40);
  Rng rng(13);
  for (int i = 0; i < 40; ++i) {
    const bool high = i % 2 == 0;
    d.x(i, 0) = rng.uniform(0.0, 0.4) + (high ? 1.6 : 0.0);
    d.x(i, 1) = rng.uniform(0.0, 0.4) + (high ? 1.6 : 0.0);
    d.y[static_cast<std::size_t>(i)] = high ? 2 : 1;
  }
  MlpTrainConfig cfg;
  cfg.seed = 2;
  cfg.max_epochs = 1000;
  const MlpTrainResult r = train_mlp(d, arch, cfg);
  REQUIRE(r.loss_trace.size() == 1001);  // initial loss plus one per epoch
  CHECK(r.loss_trace.front() > r.loss_trace.back());
  CHECK(r.loss_trace.back() < 0.1);
}

TEST_CASE("training is deterministic for a fixed seed") {
  MlpArchitecture arch;
  arch.input_dim = 3;
  arch.hidden = {10};
  arch.output_dim = 5;
  const OrdinalData d = random_batch(arch, 50, 66);
  MlpTrainConfig cfg;
  cfg.seed = 99;
  cfg.max_epochs = 40;
  const MlpTrainResult a = train_mlp(d, arch, cfg);
  const MlpTrainResult b = train_mlp(d, arch, cfg);
  for (std::size_t l = 0; l < a.params.weights.size(); ++l) {
    CHECK((a.params.weights[l] - b.params.weights[l]).lpNorm<Eigen::Infinity>() ==
          0.0);
    CHECK((a.params.biases[l] - b.params.biases[l]).lpNorm<Eigen::Infinity>() ==
          0.0);
  }
  CHECK(a.loss_trace == b.loss_trace);

  cfg.seed = 100;
  const MlpTrainResult c = train_mlp(d, arch, cfg);
  CHECK((a.params.weights[0] - c.params.weights[0]).lpNorm<Eigen::Infinity>() >
        0.0);
}

TEST_CASE("initialization is uniform inside the configured range") {
  MlpArchitecture arch;
  arch.input_dim = 6;
  arch.hidden = {25, 25};
  arch.output_dim = 84;
  const MlpParams p = mlp_init(arch, 7, 0.5);
  double lo = 1e9, hi = -1e9;
  for (const auto& w : p.weights) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        lo = std::min(lo, w(r, c));
        hi = std::max(hi, w(r, c));
      }
    }
  }
  CHECK(lo >= -0.5);
  CHECK(hi <= 0.5);
  CHECK(lo < -0.4);  // the range is actually exercised
  CHECK(hi > 0.4);
}

TEST_CASE("architectures and parameters are validated") {
  MlpArchitecture bad;
  bad.input_dim = 0;
  CHECK_THROWS_AS(validate_architecture(bad), ValidationError);

  MlpArchitecture arch;
  arch.input_dim = 3;
  arch.hidden = {4};
  arch.output_dim = 5;
  const MlpParams p = mlp_init(arch, 1, 0.5);
  Eigen::VectorXd wrong(2);
  wrong << 0.0, 1.0;
  CHECK_THROWS_AS(mlp_forward(p, wrong), ValidationError);

  OrdinalData empty;
  empty.n_classes = 5;
  empty.x.resize(0, 3);
  CHECK_THROWS_AS(mlp_loss_grad(p, empty), ValidationError);
}

TEST_CASE("parameters survive JSON round-trips") {
  MlpArchitecture arch;
  arch.input_dim = 3;
  arch.hidden = {4, 2};
  arch.output_dim = 6;
  const MlpParams p = mlp_init(arch, 31, 0.8);
  const MlpParams back = mlp_params_from_json(mlp_params_to_json(p));
  REQUIRE(back.weights.size() == p.weights.size());
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    CHECK((back.weights[l] - p.weights[l]).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((back.biases[l] - p.biases[l]).lpNorm<Eigen::Infinity>() == 0.0);
  }
  CHECK(back.arch.input_dim == p.arch.input_dim);
  CHECK(back.arch.hidden == p.arch.hidden);
  CHECK(back.arch.output_dim == p.arch.output_dim);
}
