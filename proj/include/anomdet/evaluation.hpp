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

#ifndef ANOMDET_EVALUATION_HPP
#define ANOMDET_EVALUATION_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "anomdet/common.hpp"
#include "anomdet/detector.hpp"

namespace anomdet::eval {

struct RocPoint {
  double x = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // ascending in x
  std::string ensemble_id;
};

// Precomputed member scores: calibration scores sorted once, evaluation
// scores kept per member so the quantile sweep never re-runs the critics.
struct ScoredPool {
  std::vector<std::vector<double>> calibration_sorted;
  std::vector<std::vector<double>> normal_scores;
  std::vector<std::vector<double>> anomalous_scores;

  std::size_t size() const { return calibration_sorted.size(); }
};

ScoredPool score_pool(const std::vector<nn::DenseNet>& critics,
                      const Eigen::MatrixXd& calibration,
                      const Eigen::MatrixXd& normal_eval,
                      const Eigen::MatrixXd& anomalous_eval);

// Union-rule ROC over the given members, recalibrating thresholds at every
// x in the grid.
RocCurve roc_curve(const ScoredPool& pool, const std::vector<int>& members,
                   const std::vector<double>& x_grid);

// Spec-shaped convenience overload for small ensembles.
RocCurve roc_curve(const std::vector<detect::CalibratedDiscriminator>& members,
                   const Eigen::MatrixXd& normal_eval,
                   const Eigen::MatrixXd& anomalous_eval,
                   const std::vector<double>& x_grid);

// Trapezoidal area after anchoring the curve at (0,0) and (1,1) and sorting
// by fpr.
double auc(const RocCurve& curve);

struct BootstrapPlan {
  int pool_size = 120;
  int ensemble_size = 30;
  int draws = 20;
  std::uint64_t seed = 1;
};

struct AucSummary {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> per_draw;
  std::vector<std::vector<int>> draw_members;  // sorted member indices
  std::vector<RocCurve> draw_curves;
  bool single_draw = false;
};

// Repeatedly draws ensemble_size members without replacement and evaluates
// the union-rule ROC/AUC of each draw.
AucSummary bootstrap_auc(const ScoredPool& pool, const BootstrapPlan& plan,
                         const std::vector<double>& x_grid);

struct MeanCurve {
  std::vector<double> x;
  std::vector<double> fpr_mean, fpr_std;
  std::vector<double> tpr_mean, tpr_std;
};

// Pointwise mean and sample std across curves sharing one x grid.
MeanCurve mean_curve(const std::vector<RocCurve>& curves);

// Default quantile sweep: `points` values evenly spaced over [0, 0.5].
std::vector<double> default_x_grid(int points = 101);

}  // namespace anomdet::eval

#endif  // ANOMDET_EVALUATION_HPP
