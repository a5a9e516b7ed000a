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

#ifndef ANOMDET_GANTRAIN_HPP
#define ANOMDET_GANTRAIN_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "anomdet/common.hpp"
#include "anomdet/dataflow.hpp"
#include "anomdet/diffnet.hpp"
#include "anomdet/photonics.hpp"

namespace anomdet::gan {

// Where generator inputs come from. draw() returns one latent vector per
// column and must be deterministic in `seed` (the replay source instead
// advances a cursor and ignores the seed).
class LatentSource {
 public:
  virtual ~LatentSource() = default;
  virtual int dimension() const = 0;
  virtual std::string id() const = 0;
  virtual Eigen::MatrixXd draw(int count, std::uint64_t seed) = 0;
};

class GaussianSource final : public LatentSource {
 public:
  explicit GaussianSource(int dimension) : dim_(dimension) {}
  int dimension() const override { return dim_; }
  std::string id() const override;
  Eigen::MatrixXd draw(int count, std::uint64_t seed) override;

 private:
  int dim_;
};

// Boson-sampling latent vectors: photon counts from a randomly initialized
// time-bin circuit, with an optional loss channel emulating hardware.
class SimulatedQuantumSource final : public LatentSource {
 public:
  struct Options {
    int num_modes = 16;
    int photons = 8;
    std::vector<int> loop_delays = {1, 2};
    std::uint64_t circuit_seed = 7;
    double transmission = 1.0;  // 1.0 = lossless
  };
  explicit SimulatedQuantumSource(const Options& opts);
  int dimension() const override { return opts_.num_modes; }
  std::string id() const override;
  Eigen::MatrixXd draw(int count, std::uint64_t seed) override;
  const Options& options() const { return opts_; }

 private:
  Options opts_;
  Eigen::MatrixXcd unitary_;
  photonics::FockState input_;
  std::unique_ptr<photonics::CliffordSampler> lossless_sampler_;
};

// Replays recorded samples from a latent file, in file order. Each instance
// owns its cursor. With wrapping enabled the cursor restarts at the first
// record and `wrapped()` latches; otherwise exhaustion is a data error.
class ReplaySource final : public LatentSource {
 public:
  ReplaySource(const std::filesystem::path& path, bool allow_wrap);
  int dimension() const override { return dim_; }
  std::string id() const override;
  Eigen::MatrixXd draw(int count, std::uint64_t seed) override;
  bool wrapped() const { return wrapped_; }
  std::size_t record_count() const { return records_.size(); }

 private:
  std::string filename_;
  std::string source_tag_;
  int dim_ = 0;
  bool allow_wrap_ = true;
  bool wrapped_ = false;
  std::size_t cursor_ = 0;
  std::vector<Eigen::VectorXd> records_;
};

struct GanConfig {
  int latent_dim = 16;
  int data_dim = 30;
  std::vector<int> gen_hidden = {64, 64};
  std::vector<int> critic_hidden = {64, 64};
  double leaky_slope = 0.2;
  double lambda = 10.0;
  int n_critic = 5;
  int batch_size = 64;
  int iterations = 3000;
  double learning_rate = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 1;

  std::vector<int> generator_sizes() const;
  std::vector<int> critic_sizes() const;
  void validate() const;
};

struct IterationTrace {
  double wasserstein = 0.0;  // mean D(fake) - mean D(real), last critic step
  double penalty = 0.0;
  double critic_total = 0.0;
  double generator_loss = 0.0;
};

struct TrainedModel {
  nn::DenseNet generator;
  nn::DenseNet critic;
  GanConfig config;
  std::string latent_source_id;
  std::vector<IterationTrace> trace;
};

struct CriticLosses {
  double wasserstein = 0.0;
  double penalty = 0.0;
  double total = 0.0;
};

// epsilon*real + (1-epsilon)*fake, one epsilon per pair.
Eigen::MatrixXd interpolate_pairs(const Eigen::MatrixXd& real,
                                  const Eigen::MatrixXd& fake,
                                  const Eigen::VectorXd& epsilon);

CriticLosses critic_losses(const nn::DenseNet& critic,
                           const Eigen::MatrixXd& real,
                           const Eigen::MatrixXd& fake, double lambda,
                           std::uint64_t seed);

double generator_loss(const nn::DenseNet& critic, const Eigen::MatrixXd& fake);

// WGAN-GP training: n_critic critic updates then one generator update per
// iteration, Adam on both nets. Deterministic given config.seed; divergence
// aborts with the failing iteration in the message.
TrainedModel train_gan(const GanConfig& config, const Eigen::MatrixXd& data,
                       LatentSource& source);
TrainedModel train_gan(const GanConfig& config,
                       const std::vector<data::ProcessWindow>& data,
                       LatentSource& source);

struct EnsembleMember {
  int index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  TrainedModel model;  // valid when ok
};

struct EnsembleResult {
  std::vector<EnsembleMember> members;
  int successes = 0;
};

using MemberTrainer = std::function<TrainedModel(const GanConfig&, int member_index)>;

// Ensemble scheduling/divergence policy, separated from the actual trainer
// so it can be tested with stubs. Members run on up to `threads` workers;
// fewer than 90% successes fails the run.
EnsembleResult run_ensemble(const GanConfig& config_template, int pool_size,
                            std::uint64_t base_seed,
                            const MemberTrainer& trainer, int threads);

using LatentFactory =
    std::function<std::unique_ptr<LatentSource>(int member_index)>;

EnsembleResult train_ensemble(const GanConfig& config_template, int pool_size,
                              std::uint64_t base_seed,
                              const Eigen::MatrixXd& data,
                              const LatentFactory& latent_factory,
                              int threads = 1);

}  // namespace anomdet::gan

#endif  // ANOMDET_GANTRAIN_HPP
