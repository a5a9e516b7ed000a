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

#ifndef ANOMDET_DIFFNET_HPP
#define ANOMDET_DIFFNET_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "anomdet/common.hpp"

namespace anomdet::nn {

// Fully connected net: affine layers with LeakyReLU on hidden layers and an
// identity output layer. Batches are stored one example per column.
struct DenseNet {
  std::vector<Eigen::MatrixXd> weights;  // layer l: rows = out, cols = in
  std::vector<Eigen::VectorXd> biases;
  double leaky_slope = 0.2;

  int input_dim() const { return static_cast<int>(weights.front().cols()); }
  int output_dim() const { return static_cast<int>(weights.back().rows()); }
  std::size_t num_layers() const { return weights.size(); }
  std::size_t parameter_count() const;
};

// Cached pre-activations/activations from a forward pass; required by the
// backward passes.
struct ForwardTrace {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre_activations;
  std::vector<Eigen::MatrixXd> activations;  // activations.back() = output
};

// Per-parameter gradients, shaped like the owning net.
struct GradientBundle {
  std::vector<Eigen::MatrixXd> weight_grads;
  std::vector<Eigen::VectorXd> bias_grads;
  std::optional<Eigen::MatrixXd> input_grads;  // in x batch, when requested

  static GradientBundle zeros_like(const DenseNet& net);
  GradientBundle& operator+=(const GradientBundle& other);
  bool all_finite() const;
};

Eigen::MatrixXd forward(const DenseNet& net, const Eigen::MatrixXd& batch);
Eigen::MatrixXd forward(const DenseNet& net, const Eigen::MatrixXd& batch,
                        ForwardTrace& trace);

// Reverse mode through the cached trace. `upstream` holds dLoss/dOutput per
// example (out x batch); gradients sum the per-example contributions, so a
// mean-type loss should carry its 1/B factor in `upstream`.
GradientBundle backward(const DenseNet& net, const ForwardTrace& trace,
                        const Eigen::MatrixXd& upstream,
                        bool want_input_grads = false);

// Forward + backward in one call.
GradientBundle backward_params(const DenseNet& net,
                               const Eigen::MatrixXd& batch,
                               const Eigen::MatrixXd& upstream,
                               bool want_input_grads = false);

// Gradient of a scalar-output net with respect to its input; exact (the net
// is piecewise linear in x).
Eigen::VectorXd input_gradient(const DenseNet& net, const Eigen::VectorXd& x);

// Batched input gradients of a scalar-output net, one column per example.
Eigen::MatrixXd input_gradients(const DenseNet& net,
                                const Eigen::MatrixXd& batch);

// Gradient-penalty term lambda * mean_b (||grad_x D(x_b)|| - 1)^2 and its
// exact (almost-everywhere) parameter gradients. The activation masks are
// piecewise constant, so the second-order path only flows through the
// weight matrices; bias gradients are identically zero and the norm at 0
// uses subgradient 0.
struct PenaltyResult {
  double value = 0.0;
  GradientBundle grads;
};
PenaltyResult penalty_param_gradients(const DenseNet& net,
                                      const Eigen::MatrixXd& x_hat,
                                      double lambda);
double penalty_value(const DenseNet& net, const Eigen::MatrixXd& x_hat,
                     double lambda);

// Adam accumulators; shapes mirror the owning net.
struct AdamState {
  std::vector<Eigen::MatrixXd> weight_m, weight_v;
  std::vector<Eigen::VectorXd> bias_m, bias_v;
  long step = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double epsilon = 1e-8;

  static AdamState zeros_like(const DenseNet& net, double lr, double b1,
                              double b2, double eps);
};

// Standard bias-corrected Adam update, in place. Non-finite gradients raise
// DivergenceError.
void adam_step(DenseNet& net, const GradientBundle& grads, AdamState& state);

// Glorot-uniform weights, zero biases; deterministic in seed.
DenseNet init_network(const std::vector<int>& layer_sizes, double leaky_slope,
                      std::uint64_t seed);

// Checkpoint: line-oriented text with hex-float values, bit-exact on
// round trip.
void save_checkpoint(const DenseNet& net, const std::filesystem::path& path);
DenseNet load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_string(const DenseNet& net);
DenseNet checkpoint_from_string(const std::string& text);

bool same_parameters(const DenseNet& a, const DenseNet& b);

}  // namespace anomdet::nn

#endif  // ANOMDET_DIFFNET_HPP
