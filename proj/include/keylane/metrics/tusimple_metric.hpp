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

#include <string>
#include <vector>

#include "keylane/core/types.hpp"
#include "keylane/metrics/report.hpp"

namespace keylane::metrics {

// One frame in x-at-fixed-y form: every lane is an x list aligned to the
// frame's y samples, with negative x marking "no point at this y".
struct XYSampledFrame {
  std::string id;
  std::vector<double> y_samples;
  std::vector<std::vector<double>> lanes;
};

inline constexpr double kMissingX = -2.0;

// Benchmark protocol constants: a point is correct within 20 source pixels,
// and a matched lane needs 85% correct points to count as right.
inline constexpr double kPointPixelThreshold = 20.0;
inline constexpr double kLaneCorrectFraction = 0.85;

// Linear resampling of a y-ordered lane polyline at the given y positions;
// positions outside the lane's span yield kMissingX.
std::vector<double> resample_at_y(const LaneInstance& lane, const std::vector<double>& ys);

// Point-accuracy scoring. Per ground-truth lane the best-matching prediction
// contributes its correct-point count; pooled accuracy = sum C / sum S.
// Predictions never matched at >= 85% are wrong (FP); ground-truth lanes
// without a qualifying match are missed (FN). Frames are paired by id and the
// y-sample lists must agree.
EvalReport tusimple_score(const std::vector<XYSampledFrame>& preds,
                          const std::vector<XYSampledFrame>& gts,
                          double pixel_threshold = kPointPixelThreshold,
                          double lane_threshold = kLaneCorrectFraction);

}  // namespace keylane::metrics
