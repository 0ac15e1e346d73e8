/*
 * Copyright 2026 The Keylane Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "keylane/metrics/tusimple_metric.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace keylane::metrics {

std::vector<double> resample_at_y(const LaneInstance& lane, const std::vector<double>& ys) {
  std::vector<KeyPoint> pts = lane.points;
  std::sort(pts.begin(), pts.end(),
            [](const KeyPoint& a, const KeyPoint& b) { return a.y < b.y; });
  std::vector<double> out(ys.size(), kMissingX);
  if (pts.size() < 2) return out;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double y = ys[i];
    if (y < pts.front().y || y > pts.back().y) continue;
    auto it = std::lower_bound(pts.begin(), pts.end(), y,
                               [](const KeyPoint& p, double v) { return p.y < v; });
    if (it == pts.begin()) {
      out[i] = it->x;
      continue;
    }
    const KeyPoint& b = *it;
    const KeyPoint& a = *(it - 1);
    if (b.y == a.y) {
      out[i] = 0.5 * (a.x + b.x);
    } else {
      const double t = (y - a.y) / (b.y - a.y);
      out[i] = a.x + t * (b.x - a.x);
    }
  }
  return out;
}

namespace {

struct LaneMatch {
  long correct = 0;
  long total = 0;
  int pred_index = -1;
};

// Correct points of one (gt, pred) pair: positions where the ground truth has
// a point, the prediction has one too, and they differ by less than the pixel
// threshold.
long correct_points(const std::vector<double>& pred, const std::vector<double>& gt,
                    double pixel_threshold) {
  long correct = 0;
  const std::size_t n = gt.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (gt[i] < 0.0) continue;
    if (i < pred.size() && pred[i] >= 0.0 && std::abs(pred[i] - gt[i]) < pixel_threshold) {
      ++correct;
    }
  }
  return correct;
}

}  // namespace

EvalReport tusimple_score(const std::vector<XYSampledFrame>& preds,
                          const std::vector<XYSampledFrame>& gts, double pixel_threshold,
                          double lane_threshold) {
  std::map<std::string, const XYSampledFrame*> pred_by_id;
  for (const auto& f : preds) pred_by_id[f.id] = &f;
  if (pred_by_id.size() != preds.size()) throw Error("tusimple_score: duplicate prediction ids");

  EvalReport report;
  for (const auto& gt : gts) {
    auto it = pred_by_id.find(gt.id);
    if (it == pred_by_id.end()) {
      throw Error("tusimple_score: no prediction for frame '" + gt.id + "'");
    }
    const XYSampledFrame& pred = *it->second;
    if (pred.y_samples != gt.y_samples) {
      throw Error("tusimple_score: y-sample mismatch on frame '" + gt.id + "'");
    }
    for (const auto& lane : pred.lanes) {
      if (lane.size() != pred.y_samples.size()) {
        throw ShapeError("tusimple_score: prediction lane length != y-sample count");
      }
    }
    report.frames += 1;
    report.pred_lanes += static_cast<long>(pred.lanes.size());

    std::vector<bool> pred_is_right(pred.lanes.size(), false);
    for (const auto& gt_lane : gt.lanes) {
      if (gt_lane.size() != gt.y_samples.size()) {
        throw ShapeError("tusimple_score: ground-truth lane length != y-sample count");
      }
      long total = 0;
      for (double x : gt_lane) {
        if (x >= 0.0) ++total;
      }
      if (total == 0) continue;
      report.gt_lanes += 1;
      report.total_points += total;

      LaneMatch best;
      best.total = total;
      for (std::size_t p = 0; p < pred.lanes.size(); ++p) {
        const long c = correct_points(pred.lanes[p], gt_lane, pixel_threshold);
        if (c > best.correct || best.pred_index < 0) {
          if (best.pred_index < 0 || c > best.correct) {
            best.correct = c;
            best.pred_index = static_cast<int>(p);
          }
        }
      }
      report.correct_points += best.correct;
      const double acc = static_cast<double>(best.correct) / static_cast<double>(total);
      if (best.pred_index >= 0 && acc >= lane_threshold) {
        pred_is_right[best.pred_index] = true;
      } else {
        report.missed_lanes += 1;
      }
    }
    for (bool right : pred_is_right) {
      if (!right) report.wrong_lanes += 1;
    }
  }

  report.accuracy = report.total_points > 0
                        ? static_cast<double>(report.correct_points) / report.total_points
                        : 0.0;
  report.fp_rate =
      report.pred_lanes > 0 ? static_cast<double>(report.wrong_lanes) / report.pred_lanes : 0.0;
  report.fn_rate =
      report.gt_lanes > 0 ? static_cast<double>(report.missed_lanes) / report.gt_lanes : 0.0;
  return report;
}

}  // namespace keylane::metrics
