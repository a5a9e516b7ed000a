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

#include "anomdet/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "anomdet/common.hpp"
#include "anomdet/dataflow.hpp"
#include "anomdet/detector.hpp"
#include "anomdet/diffnet.hpp"
#include "anomdet/evaluation.hpp"
#include "anomdet/gantrain.hpp"
#include "anomdet/io.hpp"
#include "anomdet/photonics.hpp"

namespace anomdet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string now_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

void require_dir(const fs::path& p, const char* what) {
  if (!fs::is_directory(p)) {
    throw DataError(std::string(what) + " directory not found: " + p.string());
  }
}

void ensure_out_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (!fs::is_directory(p)) {
    throw DataError("cannot create output directory: " + p.string());
  }
}

// ---------------------------------------------------------------------------
// Latent source specs shared by sample-latent and train.

struct LatentSpec {
  std::string spec = "gaussian";  // gaussian | sim | replay:<path>
  int modes = 16;
  int photons = 8;
  std::uint64_t circuit_seed = 7;
  double transmission = 1.0;
  std::vector<int> loop_delays = {1, 2};

  std::string kind() const {
    if (spec == "gaussian") return "gaussian";
    if (spec == "sim") return "sim-quantum";
    if (spec.rfind("replay:", 0) == 0) return "replay";
    throw UsageError("unknown latent source spec: " + spec +
                     " (expected gaussian, sim, or replay:<path>)");
  }

  std::unique_ptr<gan::LatentSource> make(bool allow_wrap = true) const {
    const std::string k = kind();
    if (k == "gaussian") return std::make_unique<gan::GaussianSource>(modes);
    if (k == "sim-quantum") {
      gan::SimulatedQuantumSource::Options opts;
      opts.num_modes = modes;
      opts.photons = photons;
      opts.circuit_seed = circuit_seed;
      opts.transmission = transmission;
      opts.loop_delays = loop_delays;
      return std::make_unique<gan::SimulatedQuantumSource>(opts);
    }
    return std::make_unique<gan::ReplaySource>(spec.substr(7), allow_wrap);
  }
};

void add_latent_flags(CLI::App* cmd, LatentSpec& spec) {
  cmd->add_option("--latent", spec.spec,
                  "latent source: gaussian, sim, or replay:<path>");
  cmd->add_option("--modes", spec.modes, "latent dimension / optical modes");
  cmd->add_option("--photons", spec.photons, "photons for the sim source");
  cmd->add_option("--circuit-seed", spec.circuit_seed,
                  "interferometer angle seed for the sim source");
  cmd->add_option("--transmission", spec.transmission,
                  "per-photon survival probability (sim source)");
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataOptions {
  std::string config_path;
  std::string out_dir;
  data::SurrogateConfig config;
  int n_normal = 1000;
  int n_anomalous = 100;
};

void apply_gen_config_file(GenDataOptions& o) {
  static const std::vector<std::string> keys = {
      "baseline",  "fault_level",   "fault_onset", "noise_std",
      "mean_variance", "length",    "gains",       "lags",
      "seed",      "n_normal",      "n_anomalous"};
  const io::KvMap kv = io::read_kv_file(o.config_path, keys);
  auto get = [&](const char* k) -> const std::string* {
    auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto* v = get("baseline")) o.config.baseline = std::stod(*v);
  if (auto* v = get("fault_level")) o.config.fault_level = std::stod(*v);
  if (auto* v = get("fault_onset")) o.config.fault_onset = std::stoi(*v);
  if (auto* v = get("noise_std")) o.config.noise_std = std::stod(*v);
  if (auto* v = get("mean_variance")) o.config.mean_variance = std::stod(*v);
  if (auto* v = get("length")) o.config.length = std::stoi(*v);
  if (auto* v = get("gains")) o.config.gains = parse_double_list(*v);
  if (auto* v = get("lags")) o.config.lags = parse_double_list(*v);
  if (auto* v = get("seed")) o.config.seed = std::stoull(*v);
  if (auto* v = get("n_normal")) o.n_normal = std::stoi(*v);
  if (auto* v = get("n_anomalous")) o.n_anomalous = std::stoi(*v);
}

int cmd_gen_data(const GenDataOptions& o) {
  const auto series = data::generate_surrogate(o.config, o.n_normal,
                                               o.n_anomalous, o.config.seed);
  ensure_out_dir(o.out_dir);
  data::write_dataset(o.out_dir, series);

  io::RunManifest manifest;
  manifest.command = "gen-data";
  manifest.seeds["surrogate"] = std::to_string(o.config.seed);
  if (!o.config_path.empty()) {
    manifest.input_digests["config"] = sha256_file(o.config_path);
  }
  manifest.args = {"--out", o.out_dir,
                   "--n-normal", std::to_string(o.n_normal),
                   "--n-anomalous", std::to_string(o.n_anomalous),
                   "--seed", std::to_string(o.config.seed),
                   "--fault-level", fmt_g17(o.config.fault_level)};
  manifest.timestamp = now_utc();
  manifest.output_digests =
      io::digest_directory(o.out_dir, {"run_manifest.json"});
  io::write_run_manifest(fs::path(o.out_dir) / "run_manifest.json", manifest);

  std::cerr << "gen-data: wrote " << o.n_normal << " normal and "
            << o.n_anomalous << " anomalous series to " << o.out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// preprocess

struct PreprocessOptions {
  std::string data_dir;
  std::string out_dir;
  double train_frac = 0.6;
  double calib_frac = 0.2;
  std::uint64_t seed = 17;
};

int cmd_preprocess(const PreprocessOptions& o) {
  require_dir(o.data_dir, "dataset");
  if (o.train_frac <= 0.0 || o.calib_frac <= 0.0 ||
      o.train_frac + o.calib_frac >= 1.0) {
    throw UsageError("preprocess: fractions must be positive and sum below 1");
  }
  const auto series = data::load_dataset(o.data_dir);
  std::vector<const data::RawSeries*> normals;
  std::vector<const data::RawSeries*> anomalies;
  for (const auto& s : series) {
    (s.label == data::Label::kNormal ? normals : anomalies).push_back(&s);
  }
  if (normals.size() < 5) {
    throw DataError("preprocess: need at least 5 normal series to split");
  }

  std::vector<std::size_t> order(normals.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(o.seed);
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(
      std::llround(o.train_frac * static_cast<double>(normals.size())));
  const auto n_calib = static_cast<std::size_t>(
      std::llround(o.calib_frac * static_cast<double>(normals.size())));
  if (n_train == 0 || n_calib == 0 || n_train + n_calib >= normals.size()) {
    throw DataError("preprocess: split leaves an empty partition");
  }

  std::vector<data::RawSeries> train_set;
  for (std::size_t i = 0; i < n_train; ++i) {
    train_set.push_back(*normals[order[i]]);
  }
  const auto stats = data::fit_standardization(train_set);

  auto window_range = [&](std::size_t begin, std::size_t end) {
    std::vector<data::ProcessWindow> out;
    for (std::size_t i = begin; i < end; ++i) {
      out.push_back(data::preprocess(*normals[order[i]], stats));
    }
    return out;
  };
  const auto train_windows = window_range(0, n_train);
  const auto calib_windows = window_range(n_train, n_train + n_calib);
  const auto eval_windows = window_range(n_train + n_calib, normals.size());
  std::vector<data::ProcessWindow> anomalous_windows;
  for (const auto* s : anomalies) {
    anomalous_windows.push_back(data::preprocess(*s, stats));
  }

  ensure_out_dir(o.out_dir);
  const fs::path out(o.out_dir);
  data::write_windows(out / "windows_train.csv", train_windows);
  data::write_windows(out / "windows_calib.csv", calib_windows);
  data::write_windows(out / "windows_eval_normal.csv", eval_windows);
  data::write_windows(out / "windows_eval_anomalous.csv", anomalous_windows);
  {
    std::ostringstream s;
    s << "quantity,mean,std\n";
    for (Eigen::Index i = 0; i < stats.mean.size(); ++i) {
      s << "q" << (i + 1) << ',' << fmt_g17(stats.mean(i)) << ','
        << fmt_g17(stats.stddev(i)) << '\n';
    }
    io::write_text_file(out / "stats.csv", s.str());
  }

  io::RunManifest manifest;
  manifest.command = "preprocess";
  manifest.args = {"--data", o.data_dir, "--out", o.out_dir,
                   "--train-frac", fmt_g17(o.train_frac),
                   "--calib-frac", fmt_g17(o.calib_frac),
                   "--seed", std::to_string(o.seed)};
  manifest.seeds["split"] = std::to_string(o.seed);
  manifest.input_digests["dataset/manifest.csv"] =
      sha256_file((fs::path(o.data_dir) / "manifest.csv").string());
  manifest.timestamp = now_utc();
  manifest.output_digests = io::digest_directory(out, {"run_manifest.json"});
  io::write_run_manifest(out / "run_manifest.json", manifest);

  std::cerr << "preprocess: " << train_windows.size() << " train, "
            << calib_windows.size() << " calibration, " << eval_windows.size()
            << " normal-eval, " << anomalous_windows.size()
            << " anomalous-eval windows\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sample-latent

struct SampleLatentOptions {
  LatentSpec latent;
  long count = 0;
  std::uint64_t seed = 1;
  std::string out_path;
  bool validate = false;
};

int cmd_sample_latent(const SampleLatentOptions& o) {
  if (o.count < 0) throw UsageError("sample-latent: count must be >= 0");
  auto source = o.latent.make();

  if (o.validate) {
    if (o.latent.kind() != "sim-quantum") {
      throw UsageError("--validate applies to the sim source only");
    }
    if (photonics::output_space_size(o.latent.modes, o.latent.photons) >
        100000) {
      throw CapacityError(
          "sample-latent: output space too large for brute-force validation");
    }
  }

  io::LatentFile file;
  file.modes = o.latent.modes;
  file.photons = o.latent.kind() == "sim-quantum" ? o.latent.photons : 0;
  file.source = source->id();
  if (o.count > 0) {
    const Eigen::MatrixXd draws =
        source->draw(static_cast<int>(o.count), o.seed);
    file.records.reserve(static_cast<std::size_t>(o.count));
    for (Eigen::Index c = 0; c < draws.cols(); ++c) {
      file.records.emplace_back(draws.col(c));
    }
  }
  io::write_latent_file(o.out_path, file);

  if (o.validate) {
    const auto circ = photonics::build_time_bin_circuit(
        o.latent.modes, o.latent.loop_delays, o.latent.circuit_seed);
    const auto u = photonics::interferometer_to_unitary(circ);
    const auto input =
        photonics::FockState::first_modes(o.latent.modes, o.latent.photons);
    const auto exact = photonics::brute_force_distribution(u, input);
    std::map<std::vector<int>, double> empirical;
    for (const auto& rec : file.records) {
      std::vector<int> occ(static_cast<std::size_t>(rec.size()));
      for (Eigen::Index i = 0; i < rec.size(); ++i) {
        occ[static_cast<std::size_t>(i)] = static_cast<int>(rec(i));
      }
      empirical[occ] += 1.0 / static_cast<double>(file.records.size());
    }
    double tv = 0.0;
    for (const auto& [occ, p] : exact) {
      const auto it = empirical.find(occ);
      tv += std::abs(p - (it == empirical.end() ? 0.0 : it->second));
    }
    for (const auto& [occ, p] : empirical) {
      if (!exact.count(occ)) tv += p;
    }
    tv *= 0.5;
    std::cerr << "sample-latent: total-variation distance to exact distribution: "
              << tv << "\n";
  }
  std::cerr << "sample-latent: wrote " << o.count << " samples to "
            << o.out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string config_path;
  std::string data_dir;
  std::string out_dir;
  LatentSpec latent;
  int pool_size = 1;
  std::uint64_t base_seed = 42;
  int threads = 0;  // 0 = hardware concurrency
  gan::GanConfig config;
};

void apply_train_config_file(TrainOptions& o) {
  static const std::vector<std::string> keys = {
      "latent_dim",   "data_dim",  "gen_hidden", "critic_hidden",
      "leaky_slope",  "lambda",    "n_critic",   "batch_size",
      "iterations",   "learning_rate", "beta1",  "beta2",
      "adam_epsilon", "seed"};
  const io::KvMap kv = io::read_kv_file(o.config_path, keys);
  auto get = [&](const char* k) -> const std::string* {
    auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto* v = get("latent_dim")) o.config.latent_dim = std::stoi(*v);
  if (auto* v = get("data_dim")) o.config.data_dim = std::stoi(*v);
  if (auto* v = get("gen_hidden")) o.config.gen_hidden = parse_int_list(*v);
  if (auto* v = get("critic_hidden")) o.config.critic_hidden = parse_int_list(*v);
  if (auto* v = get("leaky_slope")) o.config.leaky_slope = std::stod(*v);
  if (auto* v = get("lambda")) o.config.lambda = std::stod(*v);
  if (auto* v = get("n_critic")) o.config.n_critic = std::stoi(*v);
  if (auto* v = get("batch_size")) o.config.batch_size = std::stoi(*v);
  if (auto* v = get("iterations")) o.config.iterations = std::stoi(*v);
  if (auto* v = get("learning_rate")) o.config.learning_rate = std::stod(*v);
  if (auto* v = get("beta1")) o.config.beta1 = std::stod(*v);
  if (auto* v = get("beta2")) o.config.beta2 = std::stod(*v);
  if (auto* v = get("adam_epsilon")) o.config.adam_epsilon = std::stod(*v);
  if (auto* v = get("seed")) o.base_seed = std::stoull(*v);
}

json config_to_json(const gan::GanConfig& c) {
  json j;
  j["latent_dim"] = c.latent_dim;
  j["data_dim"] = c.data_dim;
  j["gen_hidden"] = c.gen_hidden;
  j["critic_hidden"] = c.critic_hidden;
  j["leaky_slope"] = c.leaky_slope;
  j["lambda"] = c.lambda;
  j["n_critic"] = c.n_critic;
  j["batch_size"] = c.batch_size;
  j["iterations"] = c.iterations;
  j["learning_rate"] = c.learning_rate;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["adam_epsilon"] = c.adam_epsilon;
  return j;
}

std::string member_file(int index, const char* role) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "member_%03d.%s.net", index, role);
  return buf;
}

int cmd_train(const TrainOptions& opts) {
  TrainOptions o = opts;
  o.config.validate();
  if (o.pool_size < 1) throw UsageError("train: pool size must be >= 1");
  require_dir(o.data_dir, "preprocessed data");
  const auto train_windows =
      data::load_windows(fs::path(o.data_dir) / "windows_train.csv");
  if (train_windows.empty()) {
    throw DataError("train: windows_train.csv has no rows");
  }
  const Eigen::MatrixXd train_matrix = data::windows_to_matrix(train_windows);
  if (train_matrix.rows() != o.config.data_dim) {
    throw DataError("train: window dimension does not match config data_dim");
  }
  o.latent.modes = o.config.latent_dim;
  {
    // Surface bad latent specs before any training time is spent.
    auto probe = o.latent.make();
    if (probe->dimension() != o.config.latent_dim) {
      throw UsageError("train: latent dimension mismatch");
    }
  }

  int threads = o.threads;
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }

  std::cerr << "train: pool of " << o.pool_size << " models, latent "
            << o.latent.kind() << ", " << o.config.iterations
            << " iterations, " << threads << " worker(s)\n";

  const auto t0 = std::chrono::steady_clock::now();
  const gan::EnsembleResult result = gan::train_ensemble(
      o.config, o.pool_size, o.base_seed, train_matrix,
      [&](int) { return o.latent.make(); }, threads);
  const auto elapsed = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - t0)
                           .count();

  ensure_out_dir(o.out_dir);
  const fs::path out(o.out_dir);
  json members = json::array();
  std::string latent_id;
  for (const auto& m : result.members) {
    json jm;
    jm["index"] = m.index;
    jm["seed"] = m.seed;
    jm["ok"] = m.ok;
    jm["error"] = m.error;
    if (m.ok) {
      const std::string gen_file = member_file(m.index, "gen");
      const std::string critic_file = member_file(m.index, "critic");
      nn::save_checkpoint(m.model.generator, out / gen_file);
      nn::save_checkpoint(m.model.critic, out / critic_file);
      jm["generator"] = gen_file;
      jm["critic"] = critic_file;
      latent_id = m.model.latent_source_id;
      std::cerr << "train: member " << m.index << " done (w="
                << (m.model.trace.empty() ? 0.0
                                          : m.model.trace.back().wasserstein)
                << ")\n";
    } else {
      std::cerr << "train: member " << m.index << " EXCLUDED: " << m.error
                << "\n";
    }
    members.push_back(jm);
  }

  json pool;
  pool["format"] = "model-pool-v1";
  pool["version"] = kVersion;
  pool["base_seed"] = o.base_seed;
  pool["latent_source"] = latent_id;
  pool["latent_kind"] = o.latent.kind();
  pool["config"] = config_to_json(o.config);
  pool["members"] = members;
  pool["successes"] = result.successes;
  io::write_text_file(out / "pool_manifest.json", pool.dump(2) + "\n");

  io::RunManifest manifest;
  manifest.command = "train";
  manifest.args = {"--data", o.data_dir, "--out", o.out_dir,
                   "--latent", o.latent.spec,
                   "--pool", std::to_string(o.pool_size),
                   "--seed", std::to_string(o.base_seed)};
  manifest.seeds["base"] = std::to_string(o.base_seed);
  if (!o.config_path.empty()) {
    manifest.input_digests["config"] = sha256_file(o.config_path);
  }
  manifest.input_digests["windows_train.csv"] =
      sha256_file((fs::path(o.data_dir) / "windows_train.csv").string());
  manifest.timestamp = now_utc();
  manifest.output_digests = io::digest_directory(out, {"run_manifest.json"});
  io::write_run_manifest(out / "run_manifest.json", manifest);

  std::cerr << "train: " << result.successes << "/" << o.pool_size
            << " members trained in " << elapsed << " s\n";
  return 0;
}

// ---------------------------------------------------------------------------
// pool loading shared by calibrate/evaluate/detect

struct LoadedPool {
  json manifest;
  std::string latent_source;
  std::string latent_kind;
  std::vector<int> member_indices;
  std::vector<std::string> critic_files;
  std::vector<nn::DenseNet> critics;
};

LoadedPool load_pool(const fs::path& pool_dir) {
  require_dir(pool_dir, "model pool");
  const fs::path manifest_path = pool_dir / "pool_manifest.json";
  if (!fs::exists(manifest_path)) {
    throw DataError("no pool_manifest.json in " + pool_dir.string());
  }
  LoadedPool pool;
  try {
    pool.manifest = json::parse(io::read_text_file(manifest_path));
  } catch (const json::exception& e) {
    throw DataError("malformed pool manifest: " + std::string(e.what()));
  }
  if (pool.manifest.value("format", "") != "model-pool-v1") {
    throw DataError("unsupported pool manifest format");
  }
  pool.latent_source = pool.manifest.value("latent_source", "");
  pool.latent_kind = pool.manifest.value("latent_kind", "unknown");
  for (const auto& m : pool.manifest.at("members")) {
    if (!m.value("ok", false)) continue;
    const std::string critic_file = m.at("critic").get<std::string>();
    pool.member_indices.push_back(m.at("index").get<int>());
    pool.critic_files.push_back(critic_file);
    pool.critics.push_back(nn::load_checkpoint(pool_dir / critic_file));
  }
  if (pool.critics.empty()) {
    throw DataError("pool has no usable members: " + pool_dir.string());
  }
  return pool;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateOptions {
  std::string pool_dir;
  std::string data_dir;
  std::string out_path;  // default <pool>/bundle.json
  int x_points = 101;
};

int cmd_calibrate(const CalibrateOptions& o) {
  const LoadedPool pool = load_pool(o.pool_dir);
  require_dir(o.data_dir, "preprocessed data");
  const auto calib_windows =
      data::load_windows(fs::path(o.data_dir) / "windows_calib.csv");
  if (calib_windows.size() < 2) {
    throw DataError("calibrate: need at least 2 calibration windows");
  }
  const Eigen::MatrixXd calib = data::windows_to_matrix(calib_windows);
  const auto x_grid = eval::default_x_grid(o.x_points);

  json members = json::array();
  std::string score_digest_input;
  for (std::size_t i = 0; i < pool.critics.size(); ++i) {
    auto scores = detect::score_batch(pool.critics[i], calib);
    std::sort(scores.begin(), scores.end());
    for (double s : scores) score_digest_input += fmt_g17(s) + "\n";
    json thresholds = json::array();
    for (double x : x_grid) {
      const auto t = detect::calibrate_sorted(scores, x);
      thresholds.push_back({t.x, t.lo, t.hi});
    }
    json jm;
    jm["index"] = pool.member_indices[i];
    jm["critic"] = pool.critic_files[i];
    jm["thresholds"] = thresholds;
    members.push_back(jm);
  }

  json bundle;
  bundle["format"] = "detector-bundle-v1";
  bundle["version"] = kVersion;
  bundle["latent_source"] = pool.latent_source;
  bundle["x_grid"] = x_grid;
  bundle["calibration_digest"] = sha256_hex(score_digest_input);
  bundle["calibration_windows"] = calib_windows.size();
  bundle["members"] = members;
  const fs::path out_path = o.out_path.empty()
                                ? fs::path(o.pool_dir) / "bundle.json"
                                : fs::path(o.out_path);
  io::write_text_file(out_path, bundle.dump(2) + "\n");
  std::cerr << "calibrate: " << pool.critics.size() << " members, "
            << x_grid.size() << " x values -> " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOptions {
  std::string pool_dir;
  std::string data_dir;
  std::string out_dir;
  int ensemble_size = 30;
  int draws = 20;
  std::uint64_t seed = 1;
  int x_points = 101;
};

int cmd_evaluate(const EvaluateOptions& o) {
  const LoadedPool pool = load_pool(o.pool_dir);
  if (o.ensemble_size < 1 ||
      o.ensemble_size > static_cast<int>(pool.critics.size())) {
    throw UsageError("evaluate: ensemble size exceeds pool size (" +
                     std::to_string(pool.critics.size()) + ")");
  }
  if (o.draws < 1) throw UsageError("evaluate: draws must be >= 1");
  require_dir(o.data_dir, "preprocessed data");
  const fs::path data_dir(o.data_dir);
  const auto calib = data::windows_to_matrix(
      data::load_windows(data_dir / "windows_calib.csv"));
  const auto normal_eval = data::windows_to_matrix(
      data::load_windows(data_dir / "windows_eval_normal.csv"));
  const auto anomalous_eval = data::windows_to_matrix(
      data::load_windows(data_dir / "windows_eval_anomalous.csv"));

  const auto x_grid = eval::default_x_grid(o.x_points);
  const eval::ScoredPool scored =
      eval::score_pool(pool.critics, calib, normal_eval, anomalous_eval);
  eval::BootstrapPlan plan;
  plan.pool_size = static_cast<int>(pool.critics.size());
  plan.ensemble_size = o.ensemble_size;
  plan.draws = o.draws;
  plan.seed = o.seed;
  const eval::AucSummary summary = eval::bootstrap_auc(scored, plan, x_grid);
  const eval::MeanCurve mean = eval::mean_curve(summary.draw_curves);

  ensure_out_dir(o.out_dir);
  const fs::path out(o.out_dir);
  const std::string tag =
      pool.latent_kind + "_s" + std::to_string(o.ensemble_size);
  {
    std::ostringstream s;
    s << "x,fpr_mean,fpr_std,tpr_mean,tpr_std\n";
    for (std::size_t i = 0; i < mean.x.size(); ++i) {
      s << fmt_g17(mean.x[i]) << ',' << fmt_g17(mean.fpr_mean[i]) << ','
        << fmt_g17(mean.fpr_std[i]) << ',' << fmt_g17(mean.tpr_mean[i]) << ','
        << fmt_g17(mean.tpr_std[i]) << '\n';
    }
    io::write_text_file(out / ("roc_" + tag + ".csv"), s.str());
  }
  {
    std::ostringstream s;
    s << "latent_source,ensemble_size,auc_mean,auc_std,draws\n";
    s << pool.latent_source << ',' << o.ensemble_size << ','
      << fmt_g17(summary.mean) << ',' << fmt_g17(summary.stddev) << ','
      << o.draws << '\n';
    io::write_text_file(out / "auc_summary.csv", s.str());
  }
  {
    std::ostringstream s;
    s << "draw,auc,members\n";
    for (std::size_t d = 0; d < summary.per_draw.size(); ++d) {
      s << d << ',' << fmt_g17(summary.per_draw[d]) << ',';
      for (std::size_t i = 0; i < summary.draw_members[d].size(); ++i) {
        if (i > 0) s << ' ';
        s << summary.draw_members[d][i];
      }
      s << '\n';
    }
    io::write_text_file(out / "draws.csv", s.str());
  }

  io::RunManifest manifest;
  manifest.command = "evaluate";
  manifest.args = {"--pool", o.pool_dir, "--data", o.data_dir,
                   "--out", o.out_dir,
                   "--ensemble-size", std::to_string(o.ensemble_size),
                   "--draws", std::to_string(o.draws),
                   "--seed", std::to_string(o.seed)};
  manifest.seeds["bootstrap"] = std::to_string(o.seed);
  manifest.input_digests["pool_manifest.json"] =
      sha256_file((fs::path(o.pool_dir) / "pool_manifest.json").string());
  manifest.timestamp = now_utc();
  manifest.output_digests = io::digest_directory(out, {"run_manifest.json"});
  io::write_run_manifest(out / "run_manifest.json", manifest);

  std::cerr << "evaluate: " << pool.latent_kind << " size "
            << o.ensemble_size << ": AUC " << summary.mean << " +/- "
            << summary.stddev << " over " << o.draws << " draws\n";
  return 0;
}

// ---------------------------------------------------------------------------
// detect

struct DetectOptions {
  std::string pool_dir;
  std::string windows_path;
  double x = 0.05;
};

int cmd_detect(const DetectOptions& o) {
  require_dir(o.pool_dir, "model pool");
  const fs::path bundle_path = fs::path(o.pool_dir) / "bundle.json";
  if (!fs::exists(bundle_path)) {
    throw DataError("no bundle.json in pool (run calibrate first): " +
                    o.pool_dir);
  }
  json bundle;
  try {
    bundle = json::parse(io::read_text_file(bundle_path));
  } catch (const json::exception& e) {
    throw DataError("malformed detector bundle: " + std::string(e.what()));
  }
  if (bundle.value("format", "") != "detector-bundle-v1") {
    throw DataError("unsupported detector bundle format");
  }

  // The bundle materializes thresholds on a fixed x grid; detection x must
  // be one of those values.
  int x_index = -1;
  const auto& grid = bundle.at("x_grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(grid[i].get<double>() - o.x) < 1e-12) {
      x_index = static_cast<int>(i);
      break;
    }
  }
  if (x_index < 0) {
    throw UsageError("detect: x=" + std::to_string(o.x) +
                     " is not materialized in the bundle; re-run calibrate");
  }

  const auto windows = data::load_windows(o.windows_path);
  struct Member {
    nn::DenseNet critic;
    detect::ThresholdPair thresholds;
  };
  std::vector<Member> members;
  for (const auto& jm : bundle.at("members")) {
    Member m;
    m.critic = nn::load_checkpoint(fs::path(o.pool_dir) /
                                   jm.at("critic").get<std::string>());
    const auto& t = jm.at("thresholds").at(static_cast<std::size_t>(x_index));
    m.thresholds.x = t.at(0).get<double>();
    m.thresholds.lo = t.at(1).get<double>();
    m.thresholds.hi = t.at(2).get<double>();
    members.push_back(std::move(m));
  }
  if (members.empty()) throw DataError("detect: bundle has no members");

  for (const auto& w : windows) {
    int count = 0;
    for (const auto& m : members) {
      if (detect::flag_score(m.thresholds, detect::score(m.critic, w.features))) {
        ++count;
      }
    }
    std::cout << w.source_id << '\t' << (count > 0 ? "anomalous" : "normal")
              << '\t' << count << '\n';
  }
  std::cerr << "detect: " << windows.size() << " windows at x=" << o.x
            << " with " << members.size() << " members\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportOptions {
  std::vector<std::string> run_dirs;
};

int cmd_report(const ReportOptions& o) {
  if (o.run_dirs.empty()) throw UsageError("report: no run directories given");
  std::cout << "latent_source                             size   auc_mean"
            << "   auc_std   draws\n";
  for (const auto& dir : o.run_dirs) {
    const fs::path path = fs::path(dir) / "auc_summary.csv";
    if (!fs::exists(path)) {
      throw DataError("no auc_summary.csv in " + dir);
    }
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string source, size, mean, stddev, draws;
      std::getline(ls, source, ',');
      std::getline(ls, size, ',');
      std::getline(ls, mean, ',');
      std::getline(ls, stddev, ',');
      std::getline(ls, draws, ',');
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%-40s %5s %10.4f %9.4f %7s",
                    source.c_str(), size.c_str(), std::stod(mean),
                    std::stod(stddev), draws.c_str());
      std::cout << buf << '\n';
    }
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Ensemble WGAN-GP anomaly detection with boson-sampling latent spaces"};
  app.require_subcommand(1);

  GenDataOptions gen_opts;
  auto* gen = app.add_subcommand("gen-data", "generate a surrogate dataset");
  gen->add_option("--config", gen_opts.config_path, "surrogate config file");
  gen->add_option("--out", gen_opts.out_dir, "output dataset directory")
      ->required();
  auto* gn = gen->add_option("--n-normal", gen_opts.n_normal);
  auto* ga = gen->add_option("--n-anomalous", gen_opts.n_anomalous);
  auto* gs = gen->add_option("--seed", gen_opts.config.seed);
  auto* gf = gen->add_option("--fault-level", gen_opts.config.fault_level);
  auto* go = gen->add_option("--fault-onset", gen_opts.config.fault_onset);
  auto* gl = gen->add_option("--length", gen_opts.config.length);
  auto* gb = gen->add_option("--baseline", gen_opts.config.baseline);
  auto* gns = gen->add_option("--noise-std", gen_opts.config.noise_std);
  auto* gmv = gen->add_option("--mean-variance", gen_opts.config.mean_variance);

  PreprocessOptions pre_opts;
  auto* pre = app.add_subcommand("preprocess",
                                 "split, standardize, and window a dataset");
  pre->add_option("--data", pre_opts.data_dir, "dataset directory")->required();
  pre->add_option("--out", pre_opts.out_dir, "output directory")->required();
  pre->add_option("--train-frac", pre_opts.train_frac);
  pre->add_option("--calib-frac", pre_opts.calib_frac);
  pre->add_option("--seed", pre_opts.seed, "split shuffle seed");

  SampleLatentOptions lat_opts;
  auto* lat = app.add_subcommand("sample-latent",
                                 "export latent samples in replay format");
  add_latent_flags(lat, lat_opts.latent);
  lat->add_option("--count", lat_opts.count, "number of samples")->required();
  lat->add_option("--seed", lat_opts.seed);
  lat->add_option("--out", lat_opts.out_path, "output file")->required();
  lat->add_flag("--validate", lat_opts.validate,
                "check samples against the brute-force distribution");

  TrainOptions train_opts;
  auto* train = app.add_subcommand("train", "train a WGAN-GP model pool");
  train->add_option("--config", train_opts.config_path, "training config file");
  train->add_option("--data", train_opts.data_dir, "preprocessed data directory")
      ->required();
  train->add_option("--out", train_opts.out_dir, "pool output directory")
      ->required();
  add_latent_flags(train, train_opts.latent);
  train->add_option("--pool", train_opts.pool_size, "number of models");
  auto* ts = train->add_option("--seed", train_opts.base_seed, "base seed");
  train->add_option("--threads", train_opts.threads, "worker threads");
  auto* ti = train->add_option("--iterations", train_opts.config.iterations);
  auto* tb = train->add_option("--batch-size", train_opts.config.batch_size);

  CalibrateOptions cal_opts;
  auto* cal = app.add_subcommand("calibrate",
                                 "materialize detection thresholds for a pool");
  cal->add_option("--pool", cal_opts.pool_dir, "model pool directory")
      ->required();
  cal->add_option("--data", cal_opts.data_dir, "preprocessed data directory")
      ->required();
  cal->add_option("--out", cal_opts.out_path, "bundle path (default <pool>/bundle.json)");
  cal->add_option("--x-points", cal_opts.x_points, "quantile grid size");

  EvaluateOptions eval_opts;
  auto* evals = app.add_subcommand("evaluate",
                                   "bootstrap ROC/AUC evaluation of a pool");
  evals->add_option("--pool", eval_opts.pool_dir, "model pool directory")
      ->required();
  evals->add_option("--data", eval_opts.data_dir, "preprocessed data directory")
      ->required();
  evals->add_option("--out", eval_opts.out_dir, "output directory")->required();
  evals->add_option("--ensemble-size", eval_opts.ensemble_size);
  evals->add_option("--draws", eval_opts.draws);
  evals->add_option("--seed", eval_opts.seed);
  evals->add_option("--x-points", eval_opts.x_points, "quantile grid size");

  DetectOptions det_opts;
  auto* det = app.add_subcommand("detect", "flag windows with a calibrated pool");
  det->add_option("--pool", det_opts.pool_dir, "calibrated pool directory")
      ->required();
  det->add_option("--windows", det_opts.windows_path, "window CSV file")
      ->required();
  det->add_option("--x", det_opts.x, "quantile parameter")->required();

  ReportOptions rep_opts;
  auto* rep = app.add_subcommand("report", "summarize evaluation outputs");
  rep->add_option("--run", rep_opts.run_dirs, "evaluate output directory")
      ->required();

  std::vector<std::string> argv_storage = args;
  std::vector<const char*> argv;
  argv.push_back("anomdet");
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());

    if (gen->parsed()) {
      if (!gen_opts.config_path.empty()) {
        GenDataOptions from_file = gen_opts;
        apply_gen_config_file(from_file);
        // Flags win over file values.
        if (gn->count() == 0) gen_opts.n_normal = from_file.n_normal;
        if (ga->count() == 0) gen_opts.n_anomalous = from_file.n_anomalous;
        if (gs->count() == 0) gen_opts.config.seed = from_file.config.seed;
        if (gf->count() == 0) gen_opts.config.fault_level = from_file.config.fault_level;
        if (go->count() == 0) gen_opts.config.fault_onset = from_file.config.fault_onset;
        if (gl->count() == 0) gen_opts.config.length = from_file.config.length;
        if (gb->count() == 0) gen_opts.config.baseline = from_file.config.baseline;
        if (gns->count() == 0) gen_opts.config.noise_std = from_file.config.noise_std;
        if (gmv->count() == 0) gen_opts.config.mean_variance = from_file.config.mean_variance;
        gen_opts.config.gains = from_file.config.gains;
        gen_opts.config.lags = from_file.config.lags;
      }
      return cmd_gen_data(gen_opts);
    }
    if (pre->parsed()) return cmd_preprocess(pre_opts);
    if (lat->parsed()) return cmd_sample_latent(lat_opts);
    if (train->parsed()) {
      if (!train_opts.config_path.empty()) {
        TrainOptions from_file = train_opts;
        apply_train_config_file(from_file);
        const gan::GanConfig flag_config = train_opts.config;
        train_opts.config = from_file.config;
        if (ts->count() == 0) train_opts.base_seed = from_file.base_seed;
        if (ti->count() > 0) train_opts.config.iterations = flag_config.iterations;
        if (tb->count() > 0) train_opts.config.batch_size = flag_config.batch_size;
      }
      return cmd_train(train_opts);
    }
    if (cal->parsed()) return cmd_calibrate(cal_opts);
    if (evals->parsed()) return cmd_evaluate(eval_opts);
    if (det->parsed()) return cmd_detect(det_opts);
    if (rep->parsed()) return cmd_report(rep_opts);
    throw UsageError("no subcommand given");
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kUsage);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kUsage);
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kCapacity);
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kDivergence);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kData);
  }
}

}  // namespace anomdet::cli
