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

// Source resolution of the x-at-fixed-y label dialect.
inline constexpr double kXYSourceWidth = 1280.0;
inline constexpr double kXYSourceHeight = 720.0;
inline constexpr double kXYMissing = -2.0;

// One self-describing label line: per-lane x lists aligned to shared y
// samples, plus the image path. Coordinates are in 1280x720 source space.
struct LabelRecord {
  std::string raw_file;
  std::vector<double> h_samples;
  std::vector<std::vector<double>> lanes_x;
};

// Parses one JSON label line; throws ParseError naming the offending field.
LabelRecord parse_label_record(const std::string& json_line);

std::string label_record_to_json(const LabelRecord& rec);

// Converts one record to input-frame lanes: (x, y) pairs with x >= 0, rescaled
// from 1280x720 to 512x256; lanes left with fewer than 2 points are dropped.
// Instance ids run 1..k over the surviving lanes.
std::vector<LaneInstance> record_to_lanes(const LabelRecord& rec);

// Projects input-frame lanes back into the dialect: source coordinates and a
// shared 10-px y grid, missing positions marked with kXYMissing.
LabelRecord lanes_to_record(std::span<const LaneInstance> lanes, const std::string& raw_file,
                            double y_step = 10.0);

// Full ingestion of one label line: parses, loads and resizes the image
// (IoError when it is missing), and attaches the rescaled lanes.
Sample parse_tusimple(const std::string& json_line, const std::string& image_root);

}  // namespace keylane::data
