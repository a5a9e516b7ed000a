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

#ifndef ANOMDET_DATAFLOW_HPP
#define ANOMDET_DATAFLOW_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "anomdet/common.hpp"

namespace anomdet::data {

enum class Label { kNormal, kAnomalous };

std::string label_name(Label label);
Label label_from_name(const std::string& name);

// One simulation run: hourly samples of the tracked quantities. Row t is
// hour t+1 (hour stamps are 1-based).
struct RawSeries {
  std::string id;
  Eigen::MatrixXd values;  // hours x quantities
  std::vector<std::string> quantity_names;
  Label label = Label::kNormal;
  std::optional<int> fault_onset_hour;

  int hours() const { return static_cast<int>(values.rows()); }
  int quantities() const { return static_cast<int>(values.cols()); }
};

// Flattened, standardized feature vector for one series.
struct ProcessWindow {
  Eigen::VectorXd features;  // 6 retained hours x 5 quantities = 30
  std::string source_id;
  Label label = Label::kNormal;
};

// Pooled per-quantity standardization statistics.
struct StandardizationStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;  // floored at 1e-8
};

// Surrogate process generator. The driver signal mimics the feed
// concentration: normal runs fluctuate about a per-series level drawn from
// N(baseline, mean_variance); anomalous runs step from baseline to
// fault_level at fault_onset. The observed quantities are first-order lag
// responses of the driver. gains[0]=1 with lags[0]=1 keeps quantity 1 equal
// to the driver itself.
struct SurrogateConfig {
  double baseline = 20.0;
  double fault_level = 19.7;
  int fault_onset = 10;  // hour stamp of the step
  double noise_std = 0.1;
  double mean_variance = 0.01;
  int length = 200;
  std::vector<double> gains = {1.0, 0.7, 1.3, 0.9, 1.1};
  std::vector<double> lags = {1.0, 3.0, 6.0, 12.0, 24.0};
  std::uint64_t seed = 1;
};

// Hours kept by preprocessing: every 8th hour of the first 48.
inline constexpr int kRetainedHours[] = {8, 16, 24, 32, 40, 48};
inline constexpr int kNumRetainedHours = 6;
inline constexpr int kNumQuantities = 5;
inline constexpr int kWindowDim = kNumRetainedHours * kNumQuantities;

std::vector<RawSeries> generate_surrogate(const SurrogateConfig& config,
                                          int n_normal, int n_anomalous,
                                          std::uint64_t seed);

// Dataset directory: manifest.csv (file,label[,fault_onset]) plus one CSV
// per series with an `hour` column followed by the quantity columns.
std::vector<RawSeries> load_dataset(const std::filesystem::path& dir);
void write_dataset(const std::filesystem::path& dir,
                   const std::vector<RawSeries>& series);

// Per-quantity mean/std pooled over all series and all retained hours.
StandardizationStats fit_standardization(const std::vector<RawSeries>& train);

// Retains kRetainedHours, standardizes, flattens time-major (all quantities
// at hour 8, then hour 16, ...).
ProcessWindow preprocess(const RawSeries& series,
                         const StandardizationStats& stats);

// Window file: CSV with id, label, and the feature columns.
void write_windows(const std::filesystem::path& path,
                   const std::vector<ProcessWindow>& windows);
std::vector<ProcessWindow> load_windows(const std::filesystem::path& path);

Eigen::MatrixXd windows_to_matrix(const std::vector<ProcessWindow>& windows);

std::vector<std::string> default_quantity_names();

}  // namespace anomdet::data

#endif  // ANOMDET_DATAFLOW_HPP
