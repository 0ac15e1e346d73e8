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
#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <vector>

#include "keylane/core/grid.hpp"
#include "keylane/core/types.hpp"
#include "keylane/post/spline.hpp"

namespace keylane::post {

// A decoded grid cell above the confidence threshold, not yet assigned to an
// instance.
struct DetectedPoint {
  double x = 0.0, y = 0.0;
  double confidence = 0.0;
  Eigen::Matrix<double, kEmbeddingDim, 1> embedding;
};

struct DetectOptions {
  double conf_threshold = 0.35;
  double cluster_distance = 0.08;
  int min_cluster_size = 3;
  // Spline penalty per lane point; 0 keeps the decoded points untouched.
  double smooth_factor = 0.5;

  static DetectOptions from(const HyperParams& hp) {
    DetectOptions o;
    o.conf_threshold = hp.conf_threshold;
    o.cluster_distance = hp.cluster_distance;
    return o;
  }
};

// One point per cell whose confidence exceeds the threshold, decoded through
// the cell/offset mapping, in row-major grid order.
template <typename S>
std::vector<DetectedPoint> extract_points(const PredictionGrid<S>& grid, double conf_threshold) {
  if (!(conf_threshold > 0.0 && conf_threshold < 1.0)) {
    throw ConfigError("extract_points: conf_threshold must be in (0,1)");
  }
  std::vector<DetectedPoint> pts;
  for (Eigen::Index r = 0; r < grid.confidence.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.confidence.cols(); ++c) {
      const double conf = static_cast<double>(grid.confidence(r, c));
      if (!(conf > conf_threshold)) continue;
      DetectedPoint p;
      auto [x, y] = decode_cell(static_cast<int>(r), static_cast<int>(c),
                                static_cast<double>(grid.offset[0](r, c)),
                                static_cast<double>(grid.offset[1](r, c)));
      p.x = x;
      p.y = y;
      p.confidence = conf;
      for (int d = 0; d < kEmbeddingDim; ++d) {
        p.embedding[d] = static_cast<double>(grid.embedding[d](r, c));
      }
      pts.push_back(p);
    }
  }
  return pts;
}

// Greedy single-pass clustering in embedding space: each point joins the first
// cluster whose running mean lies within the threshold, else opens a new one.
// Clusters below min_cluster_size are dropped as noise; survivors become lanes
// with points sorted by y (instance ids 1..k in cluster-creation order).
inline std::vector<LaneInstance> cluster(const std::vector<DetectedPoint>& points,
                                         double distance_threshold = 0.08,
                                         int min_cluster_size = 3) {
  if (!(distance_threshold > 0.0)) throw ConfigError("cluster: threshold must be > 0");
  min_cluster_size = std::max(min_cluster_size, 2);

  struct Cluster {
    Eigen::Matrix<double, kEmbeddingDim, 1> mean = Eigen::Matrix<double, kEmbeddingDim, 1>::Zero();
    std::vector<int> members;
  };
  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < points.size(); ++i) {
    int target = -1;
    for (std::size_t k = 0; k < clusters.size(); ++k) {
      if ((points[i].embedding - clusters[k].mean).norm() < distance_threshold) {
        target = static_cast<int>(k);
        break;
      }
    }
    if (target < 0) {
      clusters.push_back({});
      target = static_cast<int>(clusters.size()) - 1;
    }
    Cluster& cl = clusters[target];
    cl.members.push_back(static_cast<int>(i));
    const double m = static_cast<double>(cl.members.size());
    cl.mean += (points[i].embedding - cl.mean) / m;
  }

  std::vector<LaneInstance> lanes;
  for (const Cluster& cl : clusters) {
    if (static_cast<int>(cl.members.size()) < min_cluster_size) continue;
    LaneInstance lane;
    const int id = static_cast<int>(lanes.size()) + 1;
    for (int idx : cl.members) {
      lane.points.push_back({points[idx].x, points[idx].y, id});
    }
    std::sort(lane.points.begin(), lane.points.end(),
              [](const KeyPoint& a, const KeyPoint& b) {
                return a.y != b.y ? a.y < b.y : a.x < b.x;
              });
    lanes.push_back(std::move(lane));
  }
  return lanes;
}

// Cubic smoothing-spline fit of x as a function of y (or y(x) for lanes that
// run closer to horizontal), re-evaluated at the lane's own sample positions.
// Lanes with up to 3 points pass through unchanged; duplicate parameter values
// are collapsed to their mean before fitting.
inline LaneInstance smooth(const LaneInstance& lane, double smooth_factor = 0.5) {
  if (lane.points.size() < 2) throw LabelError("smooth: lane needs at least 2 points");
  if (lane.points.size() <= 3) return lane;

  double min_x = lane.points[0].x, max_x = min_x;
  double min_y = lane.points[0].y, max_y = min_y;
  for (const KeyPoint& p : lane.points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const bool fit_y_of_x = (max_y - min_y) < 0.5 * (max_x - min_x);

  // (param, value) pairs sorted by param with exact duplicates averaged
  std::vector<std::pair<double, double>> pv;
  pv.reserve(lane.points.size());
  for (const KeyPoint& p : lane.points) {
    if (fit_y_of_x) {
      pv.emplace_back(p.x, p.y);
    } else {
      pv.emplace_back(p.y, p.x);
    }
  }
  std::sort(pv.begin(), pv.end());
  std::vector<std::pair<double, double>> merged;
  for (std::size_t i = 0; i < pv.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < pv.size() && pv[j].first == pv[i].first) sum += pv[j++].second;
    merged.emplace_back(pv[i].first, sum / static_cast<double>(j - i));
    i = j;
  }
  if (merged.size() <= 3) {
    LaneInstance out;
    for (const auto& [t, v] : merged) {
      out.points.push_back(fit_y_of_x ? KeyPoint{t, v, lane.instance_id()}
                                      : KeyPoint{v, t, lane.instance_id()});
    }
    return out;
  }

  Eigen::VectorXd t(merged.size()), z(merged.size());
  for (std::size_t i = 0; i < merged.size(); ++i) {
    t[static_cast<Eigen::Index>(i)] = merged[i].first;
    z[static_cast<Eigen::Index>(i)] = merged[i].second;
  }
  const double lambda = smooth_factor * static_cast<double>(merged.size());
  Eigen::VectorXd fitted = smoothing_spline_fit(t, z, lambda);

  LaneInstance out;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    out.points.push_back(fit_y_of_x ? KeyPoint{t[i], fitted[i], lane.instance_id()}
                                    : KeyPoint{fitted[i], t[i], lane.instance_id()});
  }
  return out;
}

// Full grid-to-lanes decode: threshold, decode, cluster, smooth.
template <typename S>
std::vector<LaneInstance> detect(const PredictionGrid<S>& grid, const DetectOptions& opt) {
  const auto pts = extract_points(grid, opt.conf_threshold);
  auto lanes = cluster(pts, opt.cluster_distance, opt.min_cluster_size);
  for (auto& lane : lanes) {
    const int id = lane.instance_id();
    lane = smooth(lane, opt.smooth_factor);
    for (auto& p : lane.points) p.instance_id = id;
  }
  return lanes;
}

template <typename S>
std::vector<LaneInstance> detect(const PredictionGrid<S>& grid, const HyperParams& hp) {
  return detect(grid, DetectOptions::from(hp));
}

}  // namespace keylane::post
