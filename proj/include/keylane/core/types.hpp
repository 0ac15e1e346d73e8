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
#include <array>
#include <cmath>
#include <vector>

#include "keylane/common.hpp"

namespace keylane {

template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One annotated or decoded point of a traffic line, in input-frame pixels.
struct KeyPoint {
  double x = 0.0;
  double y = 0.0;
  int instance_id = 0;

  bool inside_frame() const {
    return x >= 0.0 && x < kInputWidth && y >= 0.0 && y < kInputHeight;
  }
};

// Ordered key points of one traffic line; all points share one instance id.
struct LaneInstance {
  std::vector<KeyPoint> points;

  int instance_id() const { return points.empty() ? 0 : points.front().instance_id; }
  std::size_t size() const { return points.size(); }
};

inline LaneInstance make_lane(int instance_id, const std::vector<std::pair<double, double>>& xy) {
  LaneInstance lane;
  lane.points.reserve(xy.size());
  for (const auto& [x, y] : xy) lane.points.push_back({x, y, instance_id});
  return lane;
}

// Planar CHW float image, values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;  // channels * height * width

  static Image zeros(int w, int h, int c) {
    Image im;
    im.width = w;
    im.height = h;
    im.channels = c;
    im.data.assign(static_cast<std::size_t>(c) * h * w, 0.0f);
    return im;
  }

  float& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

// Throws unless the image is exactly 3x256x512 with values inside [0, 1].
inline void validate_input_image(const Image& im) {
  if (im.channels != 3 || im.height != kInputHeight || im.width != kInputWidth) {
    throw ShapeError("input image must be 3x" + std::to_string(kInputHeight) + "x" +
                     std::to_string(kInputWidth) + ", got " + std::to_string(im.channels) + "x" +
                     std::to_string(im.height) + "x" + std::to_string(im.width));
  }
  for (float v : im.data) {
    if (!(v >= 0.0f && v <= 1.0f)) throw Error("input image values must lie in [0,1]");
  }
}

// Training target on the 32x64 cell grid. Offsets are defined only where
// exist == 1 and live in [0, 1); the instance plane is 0 on background and
// carries the 1-based lane index on key-point cells.
struct GroundTruthGrid {
  Plane<std::uint8_t> exist;
  Plane<double> offset_x;
  Plane<double> offset_y;
  Plane<int> instance;

  static GroundTruthGrid zeros() {
    GroundTruthGrid g;
    g.exist = Plane<std::uint8_t>::Zero(kGridRows, kGridCols);
    g.offset_x = Plane<double>::Zero(kGridRows, kGridCols);
    g.offset_y = Plane<double>::Zero(kGridRows, kGridCols);
    g.instance = Plane<int>::Zero(kGridRows, kGridCols);
    return g;
  }

  int n_exist() const { return static_cast<int>(exist.template cast<int>().sum()); }
  int n_background() const { return kGridRows * kGridCols - n_exist(); }
};

// One hourglass module's decoded heads over the 32x64 grid: confidence and
// offsets are logistic-squashed to [0, 1], the embedding is unsquashed.
template <typename Scalar>
struct PredictionGrid {
  Plane<Scalar> confidence;
  std::array<Plane<Scalar>, 2> offset;
  std::array<Plane<Scalar>, kEmbeddingDim> embedding;

  static PredictionGrid zeros() {
    PredictionGrid g;
    g.confidence = Plane<Scalar>::Zero(kGridRows, kGridCols);
    for (auto& p : g.offset) p = Plane<Scalar>::Zero(kGridRows, kGridCols);
    for (auto& p : g.embedding) p = Plane<Scalar>::Zero(kGridRows, kGridCols);
    return g;
  }
};

// Loss weights and decoding thresholds.
struct HyperParams {
  double gamma_e = 1.0;
  double gamma_n = 1.0;
  double gamma_o = 0.2;
  double gamma_f = 0.5;
  double gamma_d = 0.1;
  double margin = 1.0;             // K in the embedding hinge
  double conf_threshold = 0.35;    // 4-module TuSimple operating point
  double cluster_distance = 0.08;  // embedding-space threshold
  int cell_size = kCellSize;

  void validate() const {
    if (!(margin > 0.0)) throw ConfigError("margin K must be > 0");
    if (!(cluster_distance > 0.0 && cluster_distance < margin)) {
      throw ConfigError("cluster_distance must be in (0, K)");
    }
    if (!(conf_threshold > 0.0 && conf_threshold < 1.0)) {
      throw ConfigError("conf_threshold must be in (0, 1)");
    }
    if (gamma_e < 0 || gamma_n < 0 || gamma_o < 0 || gamma_f < 0 || gamma_d < 0) {
      throw ConfigError("loss weights must be nonnegative");
    }
  }
};

}  // namespace keylane
