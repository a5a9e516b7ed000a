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
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace anomdet::nn {

namespace {

// LeakyReLU derivative; slope 1 at z == 0 to match f(z) = z for z >= 0.
inline double act_deriv(double z, double slope) {
  return z >= 0.0 ? 1.0 : slope;
}

void check_net(const DenseNet& net) {
  if (net.weights.empty() || net.weights.size() != net.biases.size()) {
    throw UsageError("DenseNet: empty or inconsistent layer list");
  }
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    if (net.weights[l].rows() != net.biases[l].size()) {
      throw UsageError("DenseNet: bias shape does not match weight rows");
    }
    if (l > 0 && net.weights[l].cols() != net.weights[l - 1].rows()) {
      throw UsageError("DenseNet: consecutive layer dimensions incompatible");
    }
  }
}

}  // namespace

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<std::size_t>(weights[l].size()) +
         static_cast<std::size_t>(biases[l].size());
  }
  return n;
}

GradientBundle GradientBundle::zeros_like(const DenseNet& net) {
  GradientBundle g;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    g.weight_grads.emplace_back(
        Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    g.bias_grads.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  return g;
}

GradientBundle& GradientBundle::operator+=(const GradientBundle& other) {
  for (std::size_t l = 0; l < weight_grads.size(); ++l) {
    weight_grads[l] += other.weight_grads[l];
    bias_grads[l] += other.bias_grads[l];
  }
  return *this;
}

bool GradientBundle::all_finite() const {
  for (const auto& w : weight_grads) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : bias_grads) {
    if (!b.allFinite()) return false;
  }
  return true;
}

Eigen::MatrixXd forward(const DenseNet& net, const Eigen::MatrixXd& batch,
                        ForwardTrace& trace) {
  check_net(net);
  if (batch.rows() != net.input_dim()) {
    throw UsageError("forward: batch row count does not match input dimension");
  }
  const std::size_t layers = net.num_layers();
  trace.input = batch;
  trace.pre_activations.resize(layers);
  trace.activations.resize(layers);
  const Eigen::MatrixXd* current = &trace.input;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd& z = trace.pre_activations[l];
    z.noalias() = net.weights[l] * (*current);
    z.colwise() += net.biases[l];
    if (l + 1 < layers) {
      trace.activations[l] =
          z.unaryExpr([s = net.leaky_slope](double v) { return v >= 0.0 ? v : s * v; });
    } else {
      trace.activations[l] = z;  // identity output layer
    }
    current = &trace.activations[l];
  }
  return trace.activations.back();
}

Eigen::MatrixXd forward(const DenseNet& net, const Eigen::MatrixXd& batch) {
  ForwardTrace trace;
  return forward(net, batch, trace);
}

GradientBundle backward(const DenseNet& net, const ForwardTrace& trace,
                        const Eigen::MatrixXd& upstream,
                        bool want_input_grads) {
  const std::size_t layers = net.num_layers();
  if (trace.activations.size() != layers) {
    throw UsageError("backward: trace does not match network");
  }
  if (upstream.rows() != net.output_dim() ||
      upstream.cols() != trace.input.cols()) {
    throw UsageError("backward: upstream gradient shape mismatch");
  }
  GradientBundle g;
  g.weight_grads.resize(layers);
  g.bias_grads.resize(layers);
  Eigen::MatrixXd delta = upstream;  // output activation is identity
  for (std::size_t l = layers; l-- > 0;) {
    const Eigen::MatrixXd& below =
        (l == 0) ? trace.input : trace.activations[l - 1];
    g.weight_grads[l].noalias() = delta * below.transpose();
    g.bias_grads[l] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back;
      back.noalias() = net.weights[l].transpose() * delta;
      const Eigen::MatrixXd& z = trace.pre_activations[l - 1];
      delta = back.binaryExpr(z, [s = net.leaky_slope](double d, double zv) {
        return d * act_deriv(zv, s);
      });
    } else if (want_input_grads) {
      g.input_grads = net.weights[0].transpose() * delta;
    }
  }
  return g;
}

GradientBundle backward_params(const DenseNet& net,
                               const Eigen::MatrixXd& batch,
                               const Eigen::MatrixXd& upstream,
                               bool want_input_grads) {
  ForwardTrace trace;
  forward(net, batch, trace);
  return backward(net, trace, upstream, want_input_grads);
}

Eigen::MatrixXd input_gradients(const DenseNet& net,
                                const Eigen::MatrixXd& batch) {
  if (net.output_dim() != 1) {
    throw UsageError("input_gradients: network output must be scalar");
  }
  ForwardTrace trace;
  forward(net, batch, trace);
  const Eigen::MatrixXd upstream =
      Eigen::MatrixXd::Ones(1, batch.cols());
  GradientBundle g = backward(net, trace, upstream, true);
  return *g.input_grads;
}

Eigen::VectorXd input_gradient(const DenseNet& net, const Eigen::VectorXd& x) {
  return input_gradients(net, x).col(0);
}

PenaltyResult penalty_param_gradients(const DenseNet& net,
                                      const Eigen::MatrixXd& x_hat,
                                      double lambda) {
  if (net.output_dim() != 1) {
    throw UsageError("penalty_param_gradients: critic output must be scalar");
  }
  if (lambda < 0.0) {
    throw UsageError("penalty_param_gradients: lambda must be >= 0");
  }
  const std::size_t layers = net.num_layers();
  const Eigen::Index batch = x_hat.cols();
  ForwardTrace trace;
  forward(net, x_hat, trace);

  // Activation-derivative masks per hidden layer.
  std::vector<Eigen::MatrixXd> masks(layers > 0 ? layers - 1 : 0);
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    masks[l] = trace.pre_activations[l].unaryExpr(
        [s = net.leaky_slope](double z) { return act_deriv(z, s); });
  }

  // Suffix sweep: r[l] = dD/dz_l per sample with masks frozen; r for the
  // output layer is all-ones. v = grad_x D.
  std::vector<Eigen::MatrixXd> r(layers);
  r[layers - 1] = Eigen::MatrixXd::Ones(1, batch);
  for (std::size_t l = layers - 1; l-- > 0;) {
    Eigen::MatrixXd t;
    t.noalias() = net.weights[l + 1].transpose() * r[l + 1];
    r[l] = t.cwiseProduct(masks[l]);
  }
  Eigen::MatrixXd v;
  v.noalias() = net.weights[0].transpose() * r[0];

  PenaltyResult result;
  result.grads = GradientBundle::zeros_like(net);
  if (batch == 0) return result;

  // dP/dv per sample; norm-zero samples use subgradient 0.
  Eigen::MatrixXd g(v.rows(), batch);
  const double scale = 2.0 * lambda / static_cast<double>(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const double nrm = v.col(b).norm();
    result.value += (nrm - 1.0) * (nrm - 1.0);
    if (nrm > 0.0) {
      g.col(b) = (scale * (nrm - 1.0) / nrm) * v.col(b);
    } else {
      g.col(b).setZero();
    }
  }
  result.value *= lambda / static_cast<double>(batch);

  // Tangent sweep of g through the mask-frozen linearization, then
  // dP/dW_l = r_l p_{l-1}^T summed over the batch. Biases drop out.
  Eigen::MatrixXd p = g;
  for (std::size_t l = 0; l < layers; ++l) {
    result.grads.weight_grads[l].noalias() = r[l] * p.transpose();
    if (l + 1 < layers) {
      Eigen::MatrixXd q;
      q.noalias() = net.weights[l] * p;
      p = q.cwiseProduct(masks[l]);
    }
  }
  return result;
}

double penalty_value(const DenseNet& net, const Eigen::MatrixXd& x_hat,
                     double lambda) {
  const Eigen::MatrixXd v = input_gradients(net, x_hat);
  double sum = 0.0;
  for (Eigen::Index b = 0; b < v.cols(); ++b) {
    const double nrm = v.col(b).norm();
    sum += (nrm - 1.0) * (nrm - 1.0);
  }
  if (v.cols() == 0) return 0.0;
  return lambda * sum / static_cast<double>(v.cols());
}

AdamState AdamState::zeros_like(const DenseNet& net, double lr, double b1,
                                double b2, double eps) {
  AdamState s;
  s.learning_rate = lr;
  s.beta1 = b1;
  s.beta2 = b2;
  s.epsilon = eps;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    s.weight_m.emplace_back(
        Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    s.weight_v.emplace_back(
        Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    s.bias_m.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    s.bias_v.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  return s;
}

void adam_step(DenseNet& net, const GradientBundle& grads, AdamState& state) {
  if (grads.weight_grads.size() != net.weights.size()) {
    throw UsageError("adam_step: gradient shape mismatch");
  }
  if (!grads.all_finite()) {
    throw DivergenceError("adam_step: non-finite gradient");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const double lr = state.learning_rate;
  const double eps = state.epsilon;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    auto& m = state.weight_m[l];
    auto& v = state.weight_v[l];
    const auto& g = grads.weight_grads[l];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    net.weights[l].array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);

    auto& mb = state.bias_m[l];
    auto& vb = state.bias_v[l];
    const auto& gb = grads.bias_grads[l];
    mb = state.beta1 * mb + (1.0 - state.beta1) * gb;
    vb = state.beta2 * vb + (1.0 - state.beta2) * gb.cwiseProduct(gb);
    net.biases[l].array() -=
        lr * (mb.array() / bc1) / ((vb.array() / bc2).sqrt() + eps);
  }
}

DenseNet init_network(const std::vector<int>& layer_sizes, double leaky_slope,
                      std::uint64_t seed) {
  if (layer_sizes.size() < 2) {
    throw UsageError("init_network: need at least input and output sizes");
  }
  DenseNet net;
  net.leaky_slope = leaky_slope;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    if (fan_in <= 0 || fan_out <= 0) {
      throw UsageError("init_network: layer sizes must be positive");
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {  // row-major draw order
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-bound, bound);
    }
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(Eigen::VectorXd::Zero(fan_out));
  }
  return net;
}

namespace {

void append_hex(std::string& out, double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  out += buf;
}

double parse_hex(const char*& cursor) {
  char* end = nullptr;
  const double v = std::strtod(cursor, &end);
  if (end == cursor) throw DataError("checkpoint: malformed value");
  cursor = end;
  return v;
}

}  // namespace

std::string checkpoint_string(const DenseNet& net) {
  check_net(net);
  std::string out = "densenet v1\nlayers";
  out += " " + std::to_string(net.input_dim());
  for (const auto& w : net.weights) out += " " + std::to_string(w.rows());
  out += "\nalpha ";
  append_hex(out, net.leaky_slope);
  out += "\n";
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    out += "W" + std::to_string(l);
    const auto& w = net.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        out += ' ';
        append_hex(out, w(r, c));
      }
    }
    out += "\nb" + std::to_string(l);
    for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) {
      out += ' ';
      append_hex(out, net.biases[l](r));
    }
    out += "\n";
  }
  return out;
}

DenseNet checkpoint_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "densenet v1") {
    throw DataError("checkpoint: bad magic/version line");
  }
  if (!std::getline(in, line) || line.rfind("layers ", 0) != 0) {
    throw DataError("checkpoint: missing layer sizes");
  }
  std::vector<int> sizes;
  {
    std::istringstream ls(line.substr(7));
    int v = 0;
    while (ls >> v) sizes.push_back(v);
  }
  if (sizes.size() < 2) throw DataError("checkpoint: need >= 2 layer sizes");
  if (!std::getline(in, line) || line.rfind("alpha ", 0) != 0) {
    throw DataError("checkpoint: missing alpha");
  }
  DenseNet net;
  {
    const char* c = line.c_str() + 6;
    net.leaky_slope = parse_hex(c);
  }
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in_dim = sizes[l];
    const int out_dim = sizes[l + 1];
    if (!std::getline(in, line) ||
        line.rfind("W" + std::to_string(l) + " ", 0) != 0) {
      throw DataError("checkpoint: missing weight block W" + std::to_string(l));
    }
    Eigen::MatrixXd w(out_dim, in_dim);
    const char* c = line.c_str() + line.find(' ');
    for (int r = 0; r < out_dim; ++r) {
      for (int cc = 0; cc < in_dim; ++cc) w(r, cc) = parse_hex(c);
    }
    if (!std::getline(in, line) ||
        line.rfind("b" + std::to_string(l) + " ", 0) != 0) {
      throw DataError("checkpoint: missing bias block b" + std::to_string(l));
    }
    Eigen::VectorXd b(out_dim);
    const char* cb = line.c_str() + line.find(' ');
    for (int r = 0; r < out_dim; ++r) b(r) = parse_hex(cb);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  check_net(net);
  return net;
}

void save_checkpoint(const DenseNet& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path.string());
  out << checkpoint_string(net);
  if (!out) throw DataError("checkpoint write failed: " + path.string());
}

DenseNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str());
}

bool same_parameters(const DenseNet& a, const DenseNet& b) {
  if (a.num_layers() != b.num_layers() || a.leaky_slope != b.leaky_slope) {
    return false;
  }
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    if (a.weights[l].rows() != b.weights[l].rows() ||
        a.weights[l].cols() != b.weights[l].cols()) {
      return false;
    }
    if ((a.weights[l].array() != b.weights[l].array()).any()) return false;
    if ((a.biases[l].array() != b.biases[l].array()).any()) return false;
  }
  return true;
}

}  // namespace anomdet::nn
