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

#include "anomdet/dataflow.hpp"

#include <cmath>
#include <filesystem>

#include "doctest.h"

using namespace anomdet;
using namespace anomdet::data;

namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  const fs::path p = fs::temp_directory_path() / (std::string("anomdet_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("surrogate driver levels before and after the fault onset") {
  SurrogateConfig config;  // fault 20 -> 19.7 at hour 10
  const auto series = generate_surrogate(config, 0, 50, 99);
  CHECK(series.size() == 50);
  for (const auto& s : series) {
    CHECK(s.label == Label::kAnomalous);
    CHECK(s.fault_onset_hour == 10);
    CHECK(s.hours() == 200);
    CHECK(s.quantities() == 5);
    // Quantity 1 is the driver itself (gain 1, lag 1).
    double pre = 0.0, post = 0.0;
    for (int t = 1; t <= 9; ++t) pre += s.values(t - 1, 0);
    for (int t = 10; t <= 200; ++t) post += s.values(t - 1, 0);
    pre /= 9.0;
    post /= 191.0;
    // 3 sigma / sqrt(n) bands around the two levels.
    CHECK(std::abs(pre - 20.0) < 3.0 * 0.1 / std::sqrt(9.0));
    CHECK(std::abs(post - 19.7) < 3.0 * 0.1 / std::sqrt(191.0));
  }
}

TEST_CASE("surrogate post-onset driver mean concentrates at the fault level") {
  SurrogateConfig config;
  const auto series = generate_surrogate(config, 0, 1000, 7);
  int within = 0;
  for (const auto& s : series) {
    double post = 0.0;
    for (int t = 10; t <= 200; ++t) post += s.values(t - 1, 0);
    post /= 191.0;
    if (post >= 19.6 && post <= 19.8) ++within;
  }
  CHECK(within >= 995);  // > 99% with large margin
}

TEST_CASE("noiseless surrogate is exactly constant at the baseline") {
  SurrogateConfig config;
  config.noise_std = 0.0;
  config.mean_variance = 0.0;
  const auto series = generate_surrogate(config, 2, 0, 1);
  for (const auto& s : series) {
    for (int t = 0; t < s.hours(); ++t) {
      for (int c = 0; c < s.quantities(); ++c) {
        CHECK(s.values(t, c) ==
              doctest::Approx(20.0 * config.gains[static_cast<std::size_t>(c)])
                  .epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("surrogate is deterministic in the seed") {
  SurrogateConfig config;
  const auto a = generate_surrogate(config, 3, 2, 5);
  const auto b = generate_surrogate(config, 3, 2, 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK((a[i].values - b[i].values).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("dataset round trip is bit-exact") {
  const auto dir = temp_dir("dataset_rt");
  SurrogateConfig config;
  const auto series = generate_surrogate(config, 4, 2, 11);
  write_dataset(dir, series);
  const auto back = load_dataset(dir);
  REQUIRE(back.size() == series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    CHECK(back[i].id == series[i].id);
    CHECK(back[i].label == series[i].label);
    CHECK(back[i].fault_onset_hour == series[i].fault_onset_hour);
    CHECK((back[i].values - series[i].values).cwiseAbs().maxCoeff() == 0.0);
  }
  fs::remove_all(dir);
}

TEST_CASE("load_dataset rejects empty or malformed directories") {
  const auto dir = temp_dir("dataset_bad");
  CHECK_THROWS_AS(load_dataset(dir), DataError);
  fs::remove_all(dir);
}

TEST_CASE("standardization: identities and epsilon guard") {
  SurrogateConfig config;
  const auto train = generate_surrogate(config, 50, 0, 3);
  const auto stats = fit_standardization(train);
  REQUIRE(stats.mean.size() == 5);

  // Standardizing the fit set gives pooled mean ~0 and std ~1 per quantity.
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(5);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(5);
  long count = 0;
  for (const auto& s : train) {
    const auto w = preprocess(s, stats);
    for (int h = 0; h < kNumRetainedHours; ++h) {
      for (int c = 0; c < kNumQuantities; ++c) {
        const double v = w.features(h * kNumQuantities + c);
        sum(c) += v;
        sum_sq(c) += v * v;
      }
    }
    count += kNumRetainedHours;
  }
  for (int c = 0; c < 5; ++c) {
    const double mean = sum(c) / static_cast<double>(count);
    const double stdv = std::sqrt(sum_sq(c) / static_cast<double>(count) - mean * mean);
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(stdv - 1.0) < 1e-6);
  }

  // Disjoint series do not change fitted stats (fit uses its input only).
  const auto more = generate_surrogate(config, 10, 0, 999);
  const auto stats2 = fit_standardization(train);
  CHECK((stats.mean - stats2.mean).cwiseAbs().maxCoeff() == 0.0);
  (void)more;

  // Constant quantity: std floored, standardized values 0.
  SurrogateConfig flat;
  flat.noise_std = 0.0;
  flat.mean_variance = 0.0;
  const auto flat_train = generate_surrogate(flat, 3, 0, 1);
  const auto flat_stats = fit_standardization(flat_train);
  for (int c = 0; c < 5; ++c) CHECK(flat_stats.stddev(c) == 1e-8);
  const auto w = preprocess(flat_train[0], flat_stats);
  CHECK(w.features.cwiseAbs().maxCoeff() < 1e-4);

  CHECK_THROWS_AS(fit_standardization({}), DataError);
}

TEST_CASE("preprocess: shape, zero case, determinism, short series") {
  SurrogateConfig config;
  const auto train = generate_surrogate(config, 10, 1, 13);
  const auto stats = fit_standardization(train);

  const auto w = preprocess(train[0], stats);
  CHECK(w.features.size() == 30);
  CHECK(w.features.allFinite());

  // A series equal to the fitted means at every point maps to zero.
  RawSeries mean_series = train[0];
  for (int t = 0; t < mean_series.hours(); ++t) {
    for (int c = 0; c < 5; ++c) mean_series.values(t, c) = stats.mean(c);
  }
  const auto zero_w = preprocess(mean_series, stats);
  CHECK(zero_w.features.cwiseAbs().maxCoeff() == 0.0);

  const auto w2 = preprocess(train[0], stats);
  CHECK((w.features - w2.features).cwiseAbs().maxCoeff() == 0.0);

  RawSeries short_series = train[0];
  short_series.values = train[0].values.topRows(40);
  CHECK_THROWS_AS(preprocess(short_series, stats), DataError);
}

TEST_CASE("window files round trip") {
  const auto dir = temp_dir("windows_rt");
  SurrogateConfig config;
  const auto train = generate_surrogate(config, 6, 2, 17);
  const auto stats = fit_standardization(
      std::vector<RawSeries>(train.begin(), train.begin() + 6));
  std::vector<ProcessWindow> set;
  for (const auto& s : train) set.push_back(preprocess(s, stats));
  const auto path = dir / "windows.csv";
  write_windows(path, set);
  const auto back = load_windows(path);
  REQUIRE(back.size() == set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(back[i].source_id == set[i].source_id);
    CHECK(back[i].label == set[i].label);
    CHECK((back[i].features - set[i].features).cwiseAbs().maxCoeff() == 0.0);
  }
  fs::remove_all(dir);
}
