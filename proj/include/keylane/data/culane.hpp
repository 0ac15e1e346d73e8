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

#include <span>
#include <string>
#include <vector>

#include "keylane/core/types.hpp"
#include "keylane/data/dataset.hpp"

namespace keylane::data {

// Source resolution of the coordinate-pair annotation dialect.
inline constexpr double kPolylineSourceWidth = 1640.0;
inline constexpr double kPolylineSourceHeight = 590.0;

// Parses "<x1> <y1> <x2> <y2> ..." lines (one lane per line) into input-frame
// lanes. An odd coordinate count raises ParseError; out-of-frame points are
// dropped and lanes left with fewer than 2 points are discarded. An empty
// file yields an empty lane list.
std::vector<LaneInstance> parse_polyline_lines(const std::string& text);

// Writes input-frame lanes back into the source-space dialect.
std::string lanes_to_polyline_lines(std::span<const LaneInstance> lanes);

// Full ingestion of one frame: image plus its sibling lines file. A missing
// lines file counts as an empty annotation (crossroad-style frame).
Sample parse_culane(const std::string& image_path, const std::string& lines_path);

}  // namespace keylane::data
