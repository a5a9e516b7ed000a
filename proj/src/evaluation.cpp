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

#include "anomdet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace anomdet::eval {

ScoredPool score_pool(const std::vector<nn::DenseNet>& critics,
                      const Eigen::MatrixXd& calibration,
                      const Eigen::MatrixXd& normal_eval,
                      const Eigen::MatrixXd& anomalous_eval) {
  if (critics.empty()) throw UsageError("score_pool: no critics");
  if (calibration.cols() < 2) {
    throw DataError("score_pool: need at least 2 calibration windows");
  }
  if (normal_eval.cols() == 0 || anomalous_eval.cols() == 0) {
    throw DataError("score_pool: evaluation sets must be non-empty");
  }
  ScoredPool pool;
  pool.calibration_sorted.reserve(critics.size());
  pool.normal_scores.reserve(critics.size());
  pool.anomalous_scores.reserve(critics.size());
  for (const auto& critic : critics) {
    auto calib = detect::score_batch(critic, calibration);
    std::sort(calib.begin(), calib.end());
    pool.calibration_sorted.push_back(std::move(calib));
    pool.normal_scores.push_back(detect::score_batch(critic, normal_eval));
    pool.anomalous_scores.push_back(detect::score_batch(critic, anomalous_eval));
  }
  return pool;
}

RocCurve roc_curve(const ScoredPool& pool, const std::vector<int>& members,
                   const std::vector<double>& x_grid) {
  if (x_grid.empty()) throw UsageError("roc_curve: empty x grid");
  for (std::size_t i = 1; i < x_grid.size(); ++i) {
    if (x_grid[i] < x_grid[i - 1]) {
      throw UsageError("roc_curve: x grid must be ascending");
    }
  }
  if (members.empty()) throw UsageError("roc_curve: empty member list");
  for (int m : members) {
    if (m < 0 || static_cast<std::size_t>(m) >= pool.size()) {
      throw UsageError("roc_curve: member index out of range");
    }
  }
  const std::size_t n_normal = pool.normal_scores.front().size();
  const std::size_t n_anomalous = pool.anomalous_scores.front().size();

  RocCurve curve;
  curve.points.reserve(x_grid.size());
  for (double x : x_grid) {
    std::vector<detect::ThresholdPair> thresholds;
    thresholds.reserve(members.size());
    for (int m : members) {
      thresholds.push_back(detect::calibrate_sorted(
          pool.calibration_sorted[static_cast<std::size_t>(m)], x));
    }
    auto union_rate = [&](const std::vector<std::vector<double>>& scores,
                          std::size_t count) {
      std::size_t flagged = 0;
      for (std::size_t w = 0; w < count; ++w) {
        for (std::size_t mi = 0; mi < members.size(); ++mi) {
          const auto& member_scores =
              scores[static_cast<std::size_t>(members[mi])];
          if (detect::flag_score(thresholds[mi], member_scores[w])) {
            ++flagged;
            break;
          }
        }
      }
      return static_cast<double>(flagged) / static_cast<double>(count);
    };
    RocPoint p;
    p.x = x;
    p.fpr = union_rate(pool.normal_scores, n_normal);
    p.tpr = union_rate(pool.anomalous_scores, n_anomalous);
    curve.points.push_back(p);
  }
  return curve;
}

RocCurve roc_curve(const std::vector<detect::CalibratedDiscriminator>& members,
                   const Eigen::MatrixXd& normal_eval,
                   const Eigen::MatrixXd& anomalous_eval,
                   const std::vector<double>& x_grid) {
  if (members.empty()) throw UsageError("roc_curve: empty ensemble");
  ScoredPool pool;
  std::vector<int> idx;
  for (std::size_t i = 0; i < members.size(); ++i) {
    pool.calibration_sorted.push_back(members[i].calibration_scores_sorted);
    pool.normal_scores.push_back(
        detect::score_batch(members[i].critic, normal_eval));
    pool.anomalous_scores.push_back(
        detect::score_batch(members[i].critic, anomalous_eval));
    idx.push_back(static_cast<int>(i));
  }
  return roc_curve(pool, idx, x_grid);
}

double auc(const RocCurve& curve) {
  if (curve.points.size() < 2) {
    throw DataError("auc: curve needs at least 2 points");
  }
  std::vector<std::pair<double, double>> pts;
  pts.reserve(curve.points.size() + 2);
  pts.emplace_back(0.0, 0.0);
  for (const auto& p : curve.points) {
    if (p.fpr < 0.0 || p.fpr > 1.0 || p.tpr < 0.0 || p.tpr > 1.0) {
      throw DataError("auc: rates out of [0, 1]");
    }
    pts.emplace_back(p.fpr, p.tpr);
  }
  pts.emplace_back(1.0, 1.0);
  std::sort(pts.begin(), pts.end());
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    area += (pts[i + 1].first - pts[i].first) *
            (pts[i].second + pts[i + 1].second) * 0.5;
  }
  return area;
}

AucSummary bootstrap_auc(const ScoredPool& pool, const BootstrapPlan& plan,
                         const std::vector<double>& x_grid) {
  if (plan.draws < 1) throw UsageError("bootstrap_auc: draws must be >= 1");
  if (plan.ensemble_size < 1 ||
      static_cast<std::size_t>(plan.ensemble_size) > pool.size()) {
    throw UsageError("bootstrap_auc: ensemble size exceeds pool");
  }
  if (plan.pool_size != static_cast<int>(pool.size())) {
    throw UsageError("bootstrap_auc: plan pool_size does not match pool");
  }
  Rng rng(plan.seed);
  AucSummary summary;
  summary.single_draw = plan.draws == 1;
  std::vector<int> indices(pool.size());
  std::iota(indices.begin(), indices.end(), 0);
  for (int d = 0; d < plan.draws; ++d) {
    // Partial Fisher-Yates: the first ensemble_size entries are a uniform
    // without-replacement draw.
    for (int i = 0; i < plan.ensemble_size; ++i) {
      const std::size_t j =
          static_cast<std::size_t>(i) +
          rng.uniform_index(pool.size() - static_cast<std::size_t>(i));
      std::swap(indices[static_cast<std::size_t>(i)], indices[j]);
    }
    std::vector<int> drawn(indices.begin(),
                           indices.begin() + plan.ensemble_size);
    std::sort(drawn.begin(), drawn.end());
    RocCurve curve = roc_curve(pool, drawn, x_grid);
    summary.per_draw.push_back(auc(curve));
    summary.draw_members.push_back(std::move(drawn));
    summary.draw_curves.push_back(std::move(curve));
  }
  const double n = static_cast<double>(summary.per_draw.size());
  summary.mean =
      std::accumulate(summary.per_draw.begin(), summary.per_draw.end(), 0.0) / n;
  if (summary.per_draw.size() > 1) {
    double ss = 0.0;
    for (double v : summary.per_draw) {
      ss += (v - summary.mean) * (v - summary.mean);
    }
    summary.stddev = std::sqrt(ss / (n - 1.0));
  }
  return summary;
}

MeanCurve mean_curve(const std::vector<RocCurve>& curves) {
  if (curves.empty()) throw UsageError("mean_curve: no curves");
  const std::size_t n_points = curves.front().points.size();
  for (const auto& c : curves) {
    if (c.points.size() != n_points) {
      throw UsageError("mean_curve: curves have mismatched grids");
    }
    for (std::size_t i = 0; i < n_points; ++i) {
      if (c.points[i].x != curves.front().points[i].x) {
        throw UsageError("mean_curve: curves have mismatched grids");
      }
    }
  }
  MeanCurve out;
  const double n = static_cast<double>(curves.size());
  for (std::size_t i = 0; i < n_points; ++i) {
    double fsum = 0.0, tsum = 0.0;
    for (const auto& c : curves) {
      fsum += c.points[i].fpr;
      tsum += c.points[i].tpr;
    }
    const double fmean = fsum / n;
    const double tmean = tsum / n;
    double fss = 0.0, tss = 0.0;
    for (const auto& c : curves) {
      fss += (c.points[i].fpr - fmean) * (c.points[i].fpr - fmean);
      tss += (c.points[i].tpr - tmean) * (c.points[i].tpr - tmean);
    }
    out.x.push_back(curves.front().points[i].x);
    out.fpr_mean.push_back(fmean);
    out.tpr_mean.push_back(tmean);
    out.fpr_std.push_back(curves.size() > 1 ? std::sqrt(fss / (n - 1.0)) : 0.0);
    out.tpr_std.push_back(curves.size() > 1 ? std::sqrt(tss / (n - 1.0)) : 0.0);
  }
  return out;
}

std::vector<double> default_x_grid(int points) {
  if (points < 2) throw UsageError("default_x_grid: need at least 2 points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    grid[static_cast<std::size_t>(i)] =
        0.5 * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

}  // namespace anomdet::eval
