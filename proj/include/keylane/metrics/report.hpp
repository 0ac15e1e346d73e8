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

#include <map>
#include <span>
#include <string>

#include "keylane/common.hpp"

namespace keylane::metrics {

struct CategoryScore {
  long tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;

  void finalize() {
    precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    f1 = (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
};

// Metric bundle for both benchmark styles. The point-accuracy fields are
// filled by the x-at-fixed-y scorer; the IoU fields by the mask scorer.
struct EvalReport {
  long frames = 0;

  // point-accuracy style
  double accuracy = 0.0, fp_rate = 0.0, fn_rate = 0.0;
  long correct_points = 0, total_points = 0;
  long wrong_lanes = 0, pred_lanes = 0;
  long missed_lanes = 0, gt_lanes = 0;

  // IoU/F1 style
  CategoryScore overall;
  std::map<std::string, CategoryScore> categories;
  long skipped_lanes = 0;
};

// Mean headline-metric gap between a full model's series and a clipped one's,
// sampled at the same checkpoints.
inline double ablation_gap(std::span<const double> full, std::span<const double> clipped) {
  if (full.size() != clipped.size()) throw ShapeError("ablation_gap: series lengths differ");
  if (full.empty()) throw Error("ablation_gap: empty series");
  double acc = 0.0;
  for (std::size_t i = 0; i < full.size(); ++i) acc += full[i] - clipped[i];
  return acc / static_cast<double>(full.size());
}

}  // namespace keylane::metrics
