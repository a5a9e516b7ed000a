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

#ifndef ANOMDET_DETECTOR_HPP
#define ANOMDET_DETECTOR_HPP

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "anomdet/common.hpp"
#include "anomdet/diffnet.hpp"

namespace anomdet::detect {

// Bottom-x / top-x quantiles of the calibration scores. Scores strictly
// outside [lo, hi] are anomalous; exact equality counts as normal.
struct ThresholdPair {
  double lo = 0.0;
  double hi = 0.0;
  double x = 0.0;
};

// Linear interpolation between order statistics at position p*(N-1).
// `sorted` must be ascending.
double quantile_linear(const std::vector<double>& sorted, double p);

double score(const nn::DenseNet& critic, const Eigen::VectorXd& window);
std::vector<double> score_batch(const nn::DenseNet& critic,
                                const Eigen::MatrixXd& windows);

ThresholdPair calibrate(const std::vector<double>& normal_scores, double x);
// Same thresholds from pre-sorted scores; the ROC sweep calls this per x.
ThresholdPair calibrate_sorted(const std::vector<double>& sorted_scores,
                               double x);

struct CalibratedDiscriminator {
  nn::DenseNet critic;
  ThresholdPair thresholds;
  std::string calibration_id;
  std::vector<double> calibration_scores_sorted;
};

CalibratedDiscriminator make_calibrated(nn::DenseNet critic,
                                        std::vector<double> normal_scores,
                                        double x, std::string calibration_id);

bool flag_score(const ThresholdPair& thresholds, double s);
bool flag(const CalibratedDiscriminator& member, const Eigen::VectorXd& window);

struct EnsembleDetector {
  std::vector<CalibratedDiscriminator> members;
  double x = 0.0;
};

bool detect_union(const EnsembleDetector& ensemble,
                  const Eigen::VectorXd& window);

// (fpr, tpr): fraction of each evaluation set flagged by the union rule.
std::pair<double, double> batch_rates(const EnsembleDetector& ensemble,
                                      const Eigen::MatrixXd& normal_eval,
                                      const Eigen::MatrixXd& anomalous_eval);

}  // namespace anomdet::detect

#endif  // ANOMDET_DETECTOR_HPP
