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

#include "anomdet/detector.hpp"

#include <algorithm>
#include <cmath>

namespace anomdet::detect {

double quantile_linear(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw DataError("quantile_linear: empty score list");
  if (p < 0.0 || p > 1.0) throw UsageError("quantile_linear: p must be in [0, 1]");
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double score(const nn::DenseNet& critic, const Eigen::VectorXd& window) {
  if (critic.output_dim() != 1) {
    throw UsageError("score: critic output must be scalar");
  }
  if (window.size() != critic.input_dim()) {
    throw UsageError("score: window dimension does not match critic input");
  }
  return nn::forward(critic, window)(0, 0);
}

std::vector<double> score_batch(const nn::DenseNet& critic,
                                const Eigen::MatrixXd& windows) {
  if (critic.output_dim() != 1) {
    throw UsageError("score_batch: critic output must be scalar");
  }
  // One forward per window: scores must be bit-identical whether a window
  // is evaluated alone (detect) or inside a batch (calibrate/evaluate),
  // otherwise x = 0 calibration containment can break by one ulp.
  std::vector<double> scores(static_cast<std::size_t>(windows.cols()));
  for (Eigen::Index c = 0; c < windows.cols(); ++c) {
    scores[static_cast<std::size_t>(c)] = nn::forward(critic, windows.col(c))(0, 0);
  }
  return scores;
}

ThresholdPair calibrate_sorted(const std::vector<double>& sorted_scores,
                               double x) {
  if (x < 0.0 || x > 0.5) throw UsageError("calibrate: x must be in [0, 0.5]");
  if (sorted_scores.size() < 2) {
    throw DataError("calibrate: need at least 2 calibration scores");
  }
  ThresholdPair t;
  t.x = x;
  t.lo = quantile_linear(sorted_scores, x);
  t.hi = quantile_linear(sorted_scores, 1.0 - x);
  return t;
}

ThresholdPair calibrate(const std::vector<double>& normal_scores, double x) {
  std::vector<double> sorted = normal_scores;
  std::sort(sorted.begin(), sorted.end());
  return calibrate_sorted(sorted, x);
}

CalibratedDiscriminator make_calibrated(nn::DenseNet critic,
                                        std::vector<double> normal_scores,
                                        double x, std::string calibration_id) {
  std::sort(normal_scores.begin(), normal_scores.end());
  CalibratedDiscriminator member;
  member.thresholds = calibrate_sorted(normal_scores, x);
  member.critic = std::move(critic);
  member.calibration_id = std::move(calibration_id);
  member.calibration_scores_sorted = std::move(normal_scores);
  return member;
}

bool flag_score(const ThresholdPair& thresholds, double s) {
  return s < thresholds.lo || s > thresholds.hi;
}

bool flag(const CalibratedDiscriminator& member, const Eigen::VectorXd& window) {
  return flag_score(member.thresholds, score(member.critic, window));
}

bool detect_union(const EnsembleDetector& ensemble,
                  const Eigen::VectorXd& window) {
  if (ensemble.members.empty()) {
    throw UsageError("detect_union: empty ensemble");
  }
  for (const auto& member : ensemble.members) {
    if (flag(member, window)) return true;
  }
  return false;
}

std::pair<double, double> batch_rates(const EnsembleDetector& ensemble,
                                      const Eigen::MatrixXd& normal_eval,
                                      const Eigen::MatrixXd& anomalous_eval) {
  if (normal_eval.cols() == 0 || anomalous_eval.cols() == 0) {
    throw DataError("batch_rates: evaluation sets must be non-empty");
  }
  auto rate = [&](const Eigen::MatrixXd& set) {
    Eigen::Index flagged = 0;
    for (Eigen::Index c = 0; c < set.cols(); ++c) {
      if (detect_union(ensemble, set.col(c))) ++flagged;
    }
    return static_cast<double>(flagged) / static_cast<double>(set.cols());
  };
  return {rate(normal_eval), rate(anomalous_eval)};
}

}  // namespace anomdet::detect
