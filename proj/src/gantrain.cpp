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

#include "anomdet/gantrain.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "anomdet/io.hpp"

namespace anomdet::gan {

namespace {

// Sub-stream indices hung off config.seed; fixed so that checkpoints are
// reproducible from the recorded base seed alone.
constexpr std::uint64_t kStreamGeneratorInit = 1;
constexpr std::uint64_t kStreamCriticInit = 2;
constexpr std::uint64_t kStreamTraining = 3;
constexpr std::uint64_t kStreamLatentBase = 1000;

}  // namespace

std::string GaussianSource::id() const {
  return "gaussian(dim=" + std::to_string(dim_) + ")";
}

Eigen::MatrixXd GaussianSource::draw(int count, std::uint64_t seed) {
  if (count < 1) throw UsageError("draw: count must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXd out(dim_, count);
  for (int c = 0; c < count; ++c) {
    for (int r = 0; r < dim_; ++r) out(r, c) = rng.gaussian();
  }
  return out;
}

SimulatedQuantumSource::SimulatedQuantumSource(const Options& opts)
    : opts_(opts) {
  if (opts.photons < 0 || opts.photons > opts.num_modes) {
    throw UsageError("SimulatedQuantumSource: photons must be in [0, num_modes]");
  }
  if (opts.transmission < 0.0 || opts.transmission > 1.0) {
    throw UsageError("SimulatedQuantumSource: transmission must be in [0, 1]");
  }
  const auto circ = photonics::build_time_bin_circuit(
      opts.num_modes, opts.loop_delays, opts.circuit_seed);
  unitary_ = photonics::interferometer_to_unitary(circ);
  input_ = photonics::FockState::first_modes(opts.num_modes, opts.photons);
  if (opts.transmission >= 1.0) {
    lossless_sampler_ =
        std::make_unique<photonics::CliffordSampler>(unitary_, input_);
  }
}

std::string SimulatedQuantumSource::id() const {
  std::ostringstream s;
  s << "sim-quantum(modes=" << opts_.num_modes << ",photons=" << opts_.photons
    << ",circuit-seed=" << opts_.circuit_seed;
  if (opts_.transmission < 1.0) s << ",transmission=" << opts_.transmission;
  s << ")";
  return s.str();
}

Eigen::MatrixXd SimulatedQuantumSource::draw(int count, std::uint64_t seed) {
  if (count < 1) throw UsageError("draw: count must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXd out(opts_.num_modes, count);
  for (int c = 0; c < count; ++c) {
    photonics::FockState state;
    if (lossless_sampler_) {
      state = lossless_sampler_->sample(rng);
    } else {
      const photonics::FockState thinned = photonics::apply_loss(
          input_, photonics::LossModel{opts_.transmission}, rng);
      // The thinned input changes per draw, so the sampler is rebuilt; loss
      // commutes with the linear network, which keeps this exact.
      photonics::CliffordSampler sampler(unitary_, thinned);
      state = sampler.sample(rng);
    }
    out.col(c) = photonics::fock_to_latent(state, opts_.num_modes);
  }
  return out;
}

ReplaySource::ReplaySource(const std::filesystem::path& path, bool allow_wrap)
    : filename_(path.filename().string()), allow_wrap_(allow_wrap) {
  const io::LatentFile file = io::read_latent_file(path);
  if (file.records.empty()) {
    throw DataError("replay file has no records: " + path.string());
  }
  dim_ = file.modes;
  source_tag_ = file.source;
  records_ = file.records;
}

std::string ReplaySource::id() const { return "replay(" + filename_ + ")"; }

Eigen::MatrixXd ReplaySource::draw(int count, std::uint64_t /*seed*/) {
  if (count < 1) throw UsageError("draw: count must be >= 1");
  Eigen::MatrixXd out(dim_, count);
  for (int c = 0; c < count; ++c) {
    if (cursor_ == records_.size()) {
      if (!allow_wrap_) {
        throw DataError("replay file exhausted after " +
                        std::to_string(records_.size()) + " records: " +
                        filename_);
      }
      if (!wrapped_) {
        wrapped_ = true;
        std::cerr << "warning: replay source " << filename_
                  << " exhausted; wrapping to the first record\n";
      }
      cursor_ = 0;
    }
    out.col(c) = records_[cursor_++];
  }
  return out;
}

std::vector<int> GanConfig::generator_sizes() const {
  std::vector<int> sizes = {latent_dim};
  sizes.insert(sizes.end(), gen_hidden.begin(), gen_hidden.end());
  sizes.push_back(data_dim);
  return sizes;
}

std::vector<int> GanConfig::critic_sizes() const {
  std::vector<int> sizes = {data_dim};
  sizes.insert(sizes.end(), critic_hidden.begin(), critic_hidden.end());
  sizes.push_back(1);
  return sizes;
}

void GanConfig::validate() const {
  if (latent_dim < 1) throw UsageError("GanConfig: latent_dim must be >= 1");
  if (data_dim < 1) throw UsageError("GanConfig: data_dim must be >= 1");
  if (lambda < 0.0) throw UsageError("GanConfig: lambda must be >= 0");
  if (n_critic < 1) throw UsageError("GanConfig: n_critic must be >= 1");
  if (batch_size < 2) throw UsageError("GanConfig: batch_size must be >= 2");
  if (iterations < 0) throw UsageError("GanConfig: iterations must be >= 0");
  if (learning_rate <= 0.0) throw UsageError("GanConfig: learning_rate must be > 0");
}

Eigen::MatrixXd interpolate_pairs(const Eigen::MatrixXd& real,
                                  const Eigen::MatrixXd& fake,
                                  const Eigen::VectorXd& epsilon) {
  if (real.rows() != fake.rows() || real.cols() != fake.cols()) {
    throw UsageError("interpolate_pairs: batch shapes differ");
  }
  if (epsilon.size() != real.cols()) {
    throw UsageError("interpolate_pairs: epsilon length mismatch");
  }
  Eigen::MatrixXd out(real.rows(), real.cols());
  for (Eigen::Index c = 0; c < real.cols(); ++c) {
    out.col(c) = epsilon(c) * real.col(c) + (1.0 - epsilon(c)) * fake.col(c);
  }
  return out;
}

CriticLosses critic_losses(const nn::DenseNet& critic,
                           const Eigen::MatrixXd& real,
                           const Eigen::MatrixXd& fake, double lambda,
                           std::uint64_t seed) {
  if (real.rows() != fake.rows() || real.cols() != fake.cols()) {
    throw UsageError("critic_losses: batches must share size and dimension");
  }
  Rng rng(seed);
  Eigen::VectorXd epsilon(real.cols());
  for (Eigen::Index c = 0; c < epsilon.size(); ++c) epsilon(c) = rng.uniform();
  const Eigen::MatrixXd x_hat = interpolate_pairs(real, fake, epsilon);

  CriticLosses losses;
  losses.wasserstein = nn::forward(critic, fake).mean() -
                       nn::forward(critic, real).mean();
  losses.penalty = nn::penalty_value(critic, x_hat, lambda);
  losses.total = losses.wasserstein + losses.penalty;
  if (!std::isfinite(losses.total)) {
    throw DivergenceError("critic_losses: non-finite loss");
  }
  return losses;
}

double generator_loss(const nn::DenseNet& critic, const Eigen::MatrixXd& fake) {
  return -nn::forward(critic, fake).mean();
}

TrainedModel train_gan(const GanConfig& config, const Eigen::MatrixXd& data,
                       LatentSource& source) {
  config.validate();
  if (data.cols() == 0) throw DataError("train_gan: empty training set");
  if (data.rows() != config.data_dim) {
    throw DataError("train_gan: data dimension does not match config");
  }
  if (source.dimension() != config.latent_dim) {
    throw UsageError("train_gan: latent source dimension does not match config");
  }

  TrainedModel model;
  model.config = config;
  model.latent_source_id = source.id();
  model.generator = nn::init_network(config.generator_sizes(),
                                     config.leaky_slope,
                                     derive_seed(config.seed, kStreamGeneratorInit));
  model.critic = nn::init_network(config.critic_sizes(), config.leaky_slope,
                                  derive_seed(config.seed, kStreamCriticInit));

  nn::AdamState gen_opt = nn::AdamState::zeros_like(
      model.generator, config.learning_rate, config.beta1, config.beta2,
      config.adam_epsilon);
  nn::AdamState critic_opt = nn::AdamState::zeros_like(
      model.critic, config.learning_rate, config.beta1, config.beta2,
      config.adam_epsilon);

  Rng rng(derive_seed(config.seed, kStreamTraining));
  std::uint64_t latent_counter = 0;
  const int batch = config.batch_size;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const Eigen::Index n_data = data.cols();

  auto draw_latent_batch = [&]() {
    return source.draw(batch,
                       derive_seed(config.seed, kStreamLatentBase + latent_counter++));
  };
  auto sample_real_batch = [&]() {
    Eigen::MatrixXd real(config.data_dim, batch);
    for (int c = 0; c < batch; ++c) {
      real.col(c) = data.col(static_cast<Eigen::Index>(
          rng.uniform_index(static_cast<std::size_t>(n_data))));
    }
    return real;
  };

  model.trace.reserve(static_cast<std::size_t>(config.iterations));
  for (int iter = 0; iter < config.iterations; ++iter) {
    IterationTrace tr;
    for (int step = 0; step < config.n_critic; ++step) {
      const Eigen::MatrixXd real = sample_real_batch();
      const Eigen::MatrixXd fake =
          nn::forward(model.generator, draw_latent_batch());

      Eigen::VectorXd epsilon(batch);
      for (int c = 0; c < batch; ++c) epsilon(c) = rng.uniform();
      const Eigen::MatrixXd x_hat = interpolate_pairs(real, fake, epsilon);

      // Wasserstein part: d/dtheta of mean D(fake) - mean D(real), run as
      // one combined batch.
      Eigen::MatrixXd combined(config.data_dim, 2 * batch);
      combined.leftCols(batch) = fake;
      combined.rightCols(batch) = real;
      Eigen::MatrixXd upstream(1, 2 * batch);
      upstream.leftCols(batch).setConstant(inv_batch);
      upstream.rightCols(batch).setConstant(-inv_batch);
      nn::ForwardTrace trace;
      const Eigen::MatrixXd scores = nn::forward(model.critic, combined, trace);
      nn::GradientBundle grads = nn::backward(model.critic, trace, upstream);

      const nn::PenaltyResult penalty =
          nn::penalty_param_gradients(model.critic, x_hat, config.lambda);
      grads += penalty.grads;

      tr.wasserstein = scores.leftCols(batch).mean() - scores.rightCols(batch).mean();
      tr.penalty = penalty.value;
      tr.critic_total = tr.wasserstein + tr.penalty;
      if (!std::isfinite(tr.critic_total)) {
        throw DivergenceError("train_gan: non-finite critic loss at iteration " +
                              std::to_string(iter));
      }
      try {
        nn::adam_step(model.critic, grads, critic_opt);
      } catch (const DivergenceError&) {
        throw DivergenceError("train_gan: critic diverged at iteration " +
                              std::to_string(iter));
      }
    }

    {
      nn::ForwardTrace gen_trace;
      const Eigen::MatrixXd fake =
          nn::forward(model.generator, draw_latent_batch(), gen_trace);
      nn::ForwardTrace critic_trace;
      const Eigen::MatrixXd scores =
          nn::forward(model.critic, fake, critic_trace);
      const Eigen::MatrixXd upstream =
          Eigen::MatrixXd::Constant(1, batch, -inv_batch);
      const nn::GradientBundle critic_side =
          nn::backward(model.critic, critic_trace, upstream, true);
      const nn::GradientBundle gen_grads =
          nn::backward(model.generator, gen_trace, *critic_side.input_grads);
      tr.generator_loss = -scores.mean();
      if (!std::isfinite(tr.generator_loss)) {
        throw DivergenceError("train_gan: non-finite generator loss at iteration " +
                              std::to_string(iter));
      }
      try {
        nn::adam_step(model.generator, gen_grads, gen_opt);
      } catch (const DivergenceError&) {
        throw DivergenceError("train_gan: generator diverged at iteration " +
                              std::to_string(iter));
      }
    }
    model.trace.push_back(tr);
  }
  return model;
}

TrainedModel train_gan(const GanConfig& config,
                       const std::vector<data::ProcessWindow>& windows,
                       LatentSource& source) {
  return train_gan(config, data::windows_to_matrix(windows), source);
}

EnsembleResult run_ensemble(const GanConfig& config_template, int pool_size,
                            std::uint64_t base_seed,
                            const MemberTrainer& trainer, int threads) {
  if (pool_size < 1) throw UsageError("run_ensemble: pool_size must be >= 1");
  EnsembleResult result;
  result.members.resize(static_cast<std::size_t>(pool_size));
  for (int i = 0; i < pool_size; ++i) {
    auto& m = result.members[static_cast<std::size_t>(i)];
    m.index = i;
    m.seed = derive_seed(base_seed, static_cast<std::uint64_t>(i));
  }

  std::atomic<int> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= pool_size) return;
      auto& m = result.members[static_cast<std::size_t>(i)];
      GanConfig config = config_template;
      config.seed = m.seed;
      try {
        m.model = trainer(config, i);
        m.ok = true;
      } catch (const DivergenceError& e) {
        // Divergence is a per-member event covered by the exclusion policy.
        m.ok = false;
        m.error = e.what();
      } catch (...) {
        std::lock_guard<std::mutex> lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        return;
      }
    }
  };

  const int n_workers = std::max(1, std::min(threads, pool_size));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  for (const auto& m : result.members) {
    if (m.ok) ++result.successes;
  }
  const double success_rate =
      static_cast<double>(result.successes) / static_cast<double>(pool_size);
  if (success_rate < 0.9) {
    std::ostringstream msg;
    msg << "ensemble training failed: " << result.successes << "/" << pool_size
        << " members succeeded (minimum 90%)";
    for (const auto& m : result.members) {
      if (!m.ok) {
        msg << "; member " << m.index << ": " << m.error;
        break;
      }
    }
    throw DivergenceError(msg.str());
  }
  return result;
}

EnsembleResult train_ensemble(const GanConfig& config_template, int pool_size,
                              std::uint64_t base_seed,
                              const Eigen::MatrixXd& data,
                              const LatentFactory& latent_factory,
                              int threads) {
  std::mutex factory_mutex;
  auto trainer = [&](const GanConfig& config, int member_index) {
    std::unique_ptr<LatentSource> source;
    {
      // Factories may touch shared state (e.g. reading a replay file);
      // training itself runs unlocked.
      std::lock_guard<std::mutex> lock(factory_mutex);
      source = latent_factory(member_index);
    }
    return train_gan(config, data, *source);
  };
  return run_ensemble(config_template, pool_size, base_seed, trainer, threads);
}

}  // namespace anomdet::gan
