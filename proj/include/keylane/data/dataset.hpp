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

namespace keylane::data {

// One training frame. Lanes may be empty (e.g. crossroad frames). last_loss
// is updated by the trainer and drives hard-sample mining.
struct Sample {
  Image image;
  std::vector<LaneInstance> lanes;
  std::string source_id;
  double last_loss = 0.0;
};

// Persists samples as <dir>/images/<id>.ppm plus <dir>/labels.json in the
// x-at-fixed-y label dialect (source coordinates 1280x720, 10-px y grid).
void save_dataset(const std::string& dir, std::span<const Sample> samples);

// Loads a label file in the x-at-fixed-y dialect; images resolve relative to
// image_root (defaults to the label file's directory).
std::vector<Sample> load_xy_dataset(const std::string& label_file,
                                    const std::string& image_root = "");

// Loads a list file of image paths (one per line); each image expects a
// sibling "<stem>.lines.txt" coordinate-pair annotation.
std::vector<Sample> load_polyline_dataset(const std::string& list_file,
                                          const std::string& root = "");

}  // namespace keylane::data
