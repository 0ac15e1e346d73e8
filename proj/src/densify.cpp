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
#include "keylane/data/densify.hpp"

#include <cmath>

namespace keylane::data {

LaneInstance densify(const LaneInstance& lane, double step) {
  if (lane.points.size() < 2) throw LabelError("densify: lane needs at least 2 points");
  if (!(step > 0.0)) throw ConfigError("densify: step must be positive");

  LaneInstance out;
  out.points.push_back(lane.points.front());
  for (std::size_t i = 0; i + 1 < lane.points.size(); ++i) {
    const KeyPoint& a = lane.points[i];
    const KeyPoint& b = lane.points[i + 1];
    // small slack so a re-run does not re-split exactly step-sized gaps
    const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(b.x - a.x) / step - 1e-9)));
    for (int k = 1; k < pieces; ++k) {
      const double t = static_cast<double>(k) / pieces;
      out.points.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.instance_id});
    }
    out.points.push_back(b);
  }
  return out;
}

}  // namespace keylane::data
