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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "keylane/metrics/report.hpp"

namespace keylane::metrics {

struct PolylineFrame {
  std::string id;
  std::string category = "all";
  std::vector<std::vector<std::pair<double, double>>> lanes;  // source-space points
};

struct IoUScoreOptions {
  int width = 1640;
  int height = 590;
  double stroke_width = 30.0;
  double iou_threshold = 0.5;  // strict: a pair is TP only when IoU > threshold
};

// Bit mask of the lane drawn as a round-capped stroke of stroke_width pixels:
// a pixel is set when its center lies within stroke_width/2 of the polyline.
std::vector<std::uint64_t> rasterize_lane(const std::vector<std::pair<double, double>>& pts,
                                          const IoUScoreOptions& opt);

double mask_iou(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b);

// Exact one-to-one assignment maximizing total IoU; result[p] is the matched
// gt index for prediction p, or -1.
std::vector<int> optimal_assignment(const std::vector<std::vector<double>>& iou);

// IoU/F1 scoring over polyline frames paired by id: masks at source
// resolution, optimal matching, TP when IoU exceeds the threshold; reported
// per category and overall. Lanes with fewer than 2 points are skipped and
// counted in skipped_lanes.
EvalReport culane_score(const std::vector<PolylineFrame>& preds,
                        const std::vector<PolylineFrame>& gts,
                        const IoUScoreOptions& opt = {});

}  // namespace keylane::metrics
