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

#include <vector>

#include "keylane/data/dataset.hpp"

namespace keylane::data {

// Desk-scale scene generator: quadratic lane strips rendered anti-aliased over
// a textured background, with optional occluding rectangles. Fully
// deterministic for a given seed.
struct SyntheticSceneConfig {
  int lane_count_min = 2;
  int lane_count_max = 4;
  double curvature = 0.002;    // max |d2x/dy2|; 0 gives straight vertical lanes
  double noise = 0.0;          // background/strip noise level in [0,1]
  double occlusion = 0.0;      // per-lane occluder probability in [0,1]
  std::uint64_t seed = 0;

  void validate() const {
    if (lane_count_min < 0 || lane_count_max < lane_count_min) {
      throw ConfigError("synthetic: bad lane count range");
    }
    if (noise < 0.0 || noise > 1.0) throw ConfigError("synthetic: noise must be in [0,1]");
    if (occlusion < 0.0 || occlusion > 1.0) {
      throw ConfigError("synthetic: occlusion must be in [0,1]");
    }
    if (curvature < 0.0) throw ConfigError("synthetic: curvature must be >= 0");
  }
};

// Ground-truth lanes are the strip center-lines sampled every 10 px of arc
// length, instance ids 1..n.
Sample generate_synthetic(const SyntheticSceneConfig& config);

// Pool of frames with per-index derived seeds (frame i of a pool is stable
// under pool resizing).
std::vector<Sample> generate_synthetic_pool(const SyntheticSceneConfig& config, int count);

}  // namespace keylane::data
