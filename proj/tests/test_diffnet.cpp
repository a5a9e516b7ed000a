// Copyright 2026 The anomdet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "anomdet/diffnet.hpp"

#include <cmath>
#include <filesystem>
#include <functional>

#include "doctest.h"

using namespace anomdet;
using namespace anomdet::nn;

namespace {

double rel_err(double a, double b, double floor_scale) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor_scale});
}

// Central finite differences of a scalar function of the parameters,
// the independent oracle for every gradient path.
GradientBundle fd_param_gradients(DenseNet net,
                                  const std::function<double(const DenseNet&)>& f,
                                  double h) {
  GradientBundle g = GradientBundle::zeros_like(net);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c) {
        const double saved = net.weights[l](r, c);
        net.weights[l](r, c) = saved + h;
        const double up = f(net);
        net.weights[l](r, c) = saved - h;
        const double down = f(net);
        net.weights[l](r, c) = saved;
        g.weight_grads[l](r, c) = (up - down) / (2.0 * h);
      }
    }
    for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) {
      const double saved = net.biases[l](r);
      net.biases[l](r) = saved + h;
      const double up = f(net);
      net.biases[l](r) = saved - h;
      const double down = f(net);
      net.biases[l](r) = saved;
      g.bias_grads[l](r) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

void check_bundle_close(const GradientBundle& got, const GradientBundle& want,
                        double tol, double floor_scale) {
  for (std::size_t l = 0; l < got.weight_grads.size(); ++l) {
    for (Eigen::Index r = 0; r < got.weight_grads[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < got.weight_grads[l].cols(); ++c) {
        CHECK(rel_err(got.weight_grads[l](r, c), want.weight_grads[l](r, c),
                      floor_scale) < tol);
      }
    }
    for (Eigen::Index r = 0; r < got.bias_grads[l].size(); ++r) {
      CHECK(rel_err(got.bias_grads[l](r), want.bias_grads[l](r), floor_scale) <
            tol);
    }
  }
}

DenseNet linear_net(const Eigen::RowVectorXd& a, double b) {
  DenseNet net;
  net.weights.push_back(a);
  net.biases.push_back(Eigen::VectorXd::Constant(1, b));
  return net;
}

}  // namespace

TEST_CASE("forward: zeros, pass-through, leaky slope") {
  DenseNet zero;
  zero.weights = {Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(1, 3)};
  zero.biases = {Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(1)};
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 5);
  CHECK(forward(zero, x).cwiseAbs().maxCoeff() == 0.0);

  // Identity-like single path: one hidden unit with weight 1 on a positive
  // input passes through unchanged.
  DenseNet path;
  path.weights = {Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1)};
  path.biases = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  Eigen::MatrixXd pos(1, 1);
  pos << 2.5;
  CHECK(forward(path, pos)(0, 0) == doctest::Approx(2.5));

  // Negative pre-activation scales by the slope.
  DenseNet neg = path;
  neg.leaky_slope = 0.2;
  Eigen::MatrixXd negative(1, 1);
  negative << -3.0;
  CHECK(forward(neg, negative)(0, 0) == doctest::Approx(-3.0 * 0.2));

  CHECK_THROWS_AS(forward(zero, Eigen::MatrixXd::Zero(5, 2)), UsageError);
}

TEST_CASE("forward is batch-composition independent") {
  const DenseNet net = init_network({4, 8, 8, 2}, 0.2, 3);
  const Eigen::MatrixXd batch = Eigen::MatrixXd::Random(4, 6);
  const Eigen::MatrixXd full = forward(net, batch);
  for (Eigen::Index c = 0; c < batch.cols(); ++c) {
    const Eigen::MatrixXd single = forward(net, batch.col(c));
    CHECK((full.col(c) - single.col(0)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("backward_params agrees with finite differences") {
  Rng rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    const DenseNet net = init_network({3, 6, 5, 2}, 0.2,
                                      derive_seed(55, static_cast<std::uint64_t>(trial)));
    Eigen::MatrixXd batch(3, 4);
    for (Eigen::Index r = 0; r < batch.rows(); ++r) {
      for (Eigen::Index c = 0; c < batch.cols(); ++c) {
        batch(r, c) = rng.uniform(-1.5, 1.5);
      }
    }
    Eigen::VectorXd probe(2);
    probe << rng.uniform(-1, 1), rng.uniform(-1, 1);

    // Scalar loss: mean over the batch of probe . output.
    const double inv_b = 1.0 / static_cast<double>(batch.cols());
    Eigen::MatrixXd upstream(2, batch.cols());
    for (Eigen::Index c = 0; c < batch.cols(); ++c) {
      upstream.col(c) = probe * inv_b;
    }
    const GradientBundle got = backward_params(net, batch, upstream);
    const GradientBundle want = fd_param_gradients(
        net,
        [&](const DenseNet& n) {
          return (probe.transpose() * forward(n, batch)).mean();
        },
        1e-5);
    check_bundle_close(got, want, 1e-4, 1e-8);
  }
}

TEST_CASE("gradient of a disconnected parameter is zero") {
  // Second hidden unit has zero outgoing weight; its incoming weights and
  // bias cannot influence the loss.
  DenseNet net;
  net.weights = {Eigen::MatrixXd::Random(2, 3), Eigen::MatrixXd::Zero(1, 2)};
  net.weights[1](0, 0) = 0.7;  // unit 1 stays disconnected
  net.biases = {Eigen::VectorXd::Random(2), Eigen::VectorXd::Zero(1)};
  const Eigen::MatrixXd batch = Eigen::MatrixXd::Random(3, 4);
  const Eigen::MatrixXd upstream = Eigen::MatrixXd::Ones(1, 4);
  const GradientBundle g = backward_params(net, batch, upstream);
  CHECK(g.weight_grads[0].row(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.bias_grads[0](1) == 0.0);
}

TEST_CASE("batch gradient is the mean of per-example gradients") {
  const DenseNet net = init_network({3, 5, 1}, 0.2, 8);
  const Eigen::MatrixXd batch = Eigen::MatrixXd::Random(3, 2);
  const Eigen::MatrixXd up2 = Eigen::MatrixXd::Constant(1, 2, 0.5);
  const GradientBundle joint = backward_params(net, batch, up2);

  const Eigen::MatrixXd up1 = Eigen::MatrixXd::Ones(1, 1);
  GradientBundle a = backward_params(net, batch.col(0), up1);
  const GradientBundle b = backward_params(net, batch.col(1), up1);
  a += b;
  for (std::size_t l = 0; l < joint.weight_grads.size(); ++l) {
    CHECK((joint.weight_grads[l] - 0.5 * a.weight_grads[l]).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK((joint.bias_grads[l] - 0.5 * a.bias_grads[l]).cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("input gradient: linear critic, finite differences, stability") {
  Eigen::RowVectorXd a(3);
  a << 0.5, -1.5, 2.0;
  const DenseNet lin = linear_net(a, 0.3);
  Eigen::VectorXd x(3);
  x << 1.0, 2.0, -1.0;
  const Eigen::VectorXd g = input_gradient(lin, x);
  CHECK((g.transpose() - a).cwiseAbs().maxCoeff() < 1e-15);

  const DenseNet net = init_network({4, 8, 8, 1}, 0.2, 12);
  Eigen::VectorXd x0(4);
  x0 << 0.3, -0.7, 1.1, 0.4;
  const Eigen::VectorXd ag = input_gradient(net, x0);
  CHECK(ag.allFinite());
  const double h = 1e-5;
  for (int i = 0; i < 4; ++i) {
    Eigen::VectorXd up = x0, down = x0;
    up(i) += h;
    down(i) -= h;
    const double fd =
        (forward(net, up)(0, 0) - forward(net, down)(0, 0)) / (2.0 * h);
    CHECK(rel_err(ag(i), fd, 1e-8) < 1e-4);
  }

  // Piecewise linearity: a 1e-9 nudge keeps the same activation region and
  // the same exact gradient.
  Eigen::VectorXd x1 = x0;
  x1.array() += 1e-9;
  const Eigen::VectorXd ag2 = input_gradient(net, x1);
  CHECK((ag - ag2).cwiseAbs().maxCoeff() == 0.0);

  const DenseNet vec_out = init_network({4, 8, 2}, 0.2, 13);
  CHECK_THROWS_AS(input_gradient(vec_out, x0), UsageError);
}

TEST_CASE("penalty: closed forms for linear critics") {
  Eigen::RowVectorXd unit(4);
  unit << 0.5, 0.5, 0.5, 0.5;  // norm 1
  const DenseNet critic1 = linear_net(unit, 0.0);
  const Eigen::MatrixXd batch = Eigen::MatrixXd::Random(4, 6);
  const PenaltyResult p1 = penalty_param_gradients(critic1, batch, 10.0);
  CHECK(p1.value == doctest::Approx(0.0).epsilon(1e-12));

  Eigen::RowVectorXd doubled(4);
  doubled << 2.0, 0.0, 0.0, 0.0;  // norm 2
  const DenseNet critic2 = linear_net(doubled, 0.4);
  const PenaltyResult p2 = penalty_param_gradients(critic2, batch, 10.0);
  CHECK(p2.value == doctest::Approx(10.0));
  CHECK(penalty_value(critic2, batch, 10.0) == doctest::Approx(10.0));

  // Zero critic: gradient norm 0 everywhere, penalty = lambda.
  DenseNet zero;
  zero.weights = {Eigen::MatrixXd::Zero(1, 4)};
  zero.biases = {Eigen::VectorXd::Zero(1)};
  const PenaltyResult pz = penalty_param_gradients(zero, batch, 10.0);
  CHECK(pz.value == doctest::Approx(10.0));
  CHECK(pz.grads.all_finite());  // norm-zero subgradient convention
}

TEST_CASE("penalty parameter gradients agree with finite differences") {
  Rng rng(202);
  for (int trial = 0; trial < 10; ++trial) {
    const DenseNet net = init_network({4, 7, 6, 1}, 0.2,
                                      derive_seed(77, static_cast<std::uint64_t>(trial)));
    Eigen::MatrixXd batch(4, 5);
    for (Eigen::Index r = 0; r < batch.rows(); ++r) {
      for (Eigen::Index c = 0; c < batch.cols(); ++c) {
        batch(r, c) = rng.uniform(-1.5, 1.5);
      }
    }
    const double lambda = 10.0;
    const PenaltyResult got = penalty_param_gradients(net, batch, lambda);
    CHECK(std::abs(penalty_value(net, batch, lambda) - got.value) < 1e-12);
    const GradientBundle want = fd_param_gradients(
        net,
        [&](const DenseNet& n) { return penalty_value(n, batch, lambda); },
        1e-5);
    // floor 1e-6: the bias path is identically zero almost everywhere, so
    // both sides sit at numerical noise there.
    check_bundle_close(got.grads, want, 1e-3, 1e-6);
  }
}

TEST_CASE("adam") {
  DenseNet net = init_network({2, 3, 1}, 0.2, 5);
  const DenseNet before = net;
  AdamState state = AdamState::zeros_like(net, 0.1, 0.0, 0.9, 1e-8);

  adam_step(net, GradientBundle::zeros_like(net), state);
  CHECK(same_parameters(net, before));

  // One step from zero state moves by ~learning_rate against the gradient.
  DenseNet fresh = before;
  AdamState fresh_state = AdamState::zeros_like(fresh, 0.1, 0.0, 0.9, 1e-8);
  GradientBundle g = GradientBundle::zeros_like(fresh);
  g.weight_grads[0](0, 0) = 1.0;
  adam_step(fresh, g, fresh_state);
  const double delta = fresh.weights[0](0, 0) - before.weights[0](0, 0);
  CHECK(std::abs(delta + 0.1) < 1e-6);

  // Constant positive gradient keeps pushing the parameter down.
  DenseNet drift = before;
  AdamState drift_state = AdamState::zeros_like(drift, 0.01, 0.0, 0.9, 1e-8);
  GradientBundle cg = GradientBundle::zeros_like(drift);
  cg.weight_grads[1](0, 0) = 0.5;
  const double start = drift.weights[1](0, 0);
  for (int i = 0; i < 50; ++i) adam_step(drift, cg, drift_state);
  CHECK(drift.weights[1](0, 0) < start);

  GradientBundle bad = GradientBundle::zeros_like(net);
  bad.weight_grads[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(net, bad, state), DivergenceError);
}

TEST_CASE("init_network: determinism, zero biases, Glorot bounds") {
  const DenseNet a = init_network({30, 64, 64, 1}, 0.2, 42);
  const DenseNet b = init_network({30, 64, 64, 1}, 0.2, 42);
  CHECK(same_parameters(a, b));
  const DenseNet c = init_network({30, 64, 64, 1}, 0.2, 43);
  CHECK(!same_parameters(a, c));

  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    CHECK(a.biases[l].cwiseAbs().maxCoeff() == 0.0);
    const double bound = std::sqrt(
        6.0 / static_cast<double>(a.weights[l].rows() + a.weights[l].cols()));
    CHECK(a.weights[l].cwiseAbs().maxCoeff() <= bound);
  }
  CHECK_THROWS_AS(init_network({5}, 0.2, 1), UsageError);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  const DenseNet net = init_network({7, 11, 5, 1}, 0.2, 2024);
  const std::string text = checkpoint_string(net);
  const DenseNet back = checkpoint_from_string(text);
  CHECK(same_parameters(net, back));
  CHECK(checkpoint_string(back) == text);

  const auto path = std::filesystem::temp_directory_path() / "anomdet_ckpt_test.net";
  save_checkpoint(net, path);
  const DenseNet from_file = load_checkpoint(path);
  CHECK(same_parameters(net, from_file));
  std::filesystem::remove(path);

  CHECK_THROWS_AS(checkpoint_from_string("bogus"), DataError);
}
