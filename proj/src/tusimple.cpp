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
#include "keylane/data/tusimple.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "keylane/io/image.hpp"

namespace keylane::data {

using nlohmann::json;

LabelRecord parse_label_record(const std::string& json_line) {
  json j;
  try {
    j = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("label record is not valid JSON: ") + e.what());
  }
  LabelRecord rec;
  if (!j.contains("raw_file") || !j["raw_file"].is_string()) {
    throw ParseError("label record: missing or non-string field 'raw_file'");
  }
  rec.raw_file = j["raw_file"].get<std::string>();
  if (!j.contains("h_samples") || !j["h_samples"].is_array()) {
    throw ParseError("label record: missing or non-array field 'h_samples'");
  }
  for (const auto& v : j["h_samples"]) {
    if (!v.is_number()) throw ParseError("label record: non-numeric entry in 'h_samples'");
    rec.h_samples.push_back(v.get<double>());
  }
  if (!j.contains("lanes") || !j["lanes"].is_array()) {
    throw ParseError("label record: missing or non-array field 'lanes'");
  }
  for (const auto& lane : j["lanes"]) {
    if (!lane.is_array()) throw ParseError("label record: non-array lane in 'lanes'");
    std::vector<double> xs;
    for (const auto& v : lane) {
      if (!v.is_number()) throw ParseError("label record: non-numeric x in 'lanes'");
      xs.push_back(v.get<double>());
    }
    if (xs.size() != rec.h_samples.size()) {
      throw ParseError("label record: lane length " + std::to_string(xs.size()) +
                       " != h_samples length " + std::to_string(rec.h_samples.size()));
    }
    rec.lanes_x.push_back(std::move(xs));
  }
  return rec;
}

std::string label_record_to_json(const LabelRecord& rec) {
  json j;
  j["raw_file"] = rec.raw_file;
  j["h_samples"] = rec.h_samples;
  j["lanes"] = rec.lanes_x;
  return j.dump();
}

std::vector<LaneInstance> record_to_lanes(const LabelRecord& rec) {
  const double sx = kInputWidth / kXYSourceWidth;
  const double sy = kInputHeight / kXYSourceHeight;
  std::vector<LaneInstance> lanes;
  for (const auto& xs : rec.lanes_x) {
    LaneInstance lane;
    const int id = static_cast<int>(lanes.size()) + 1;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (xs[i] < 0.0) continue;
      const double x = xs[i] * sx;
      const double y = rec.h_samples[i] * sy;
      if (x >= kInputWidth || y >= kInputHeight) continue;
      lane.points.push_back({x, y, id});
    }
    if (lane.points.size() >= 2) lanes.push_back(std::move(lane));
  }
  return lanes;
}

LabelRecord lanes_to_record(std::span<const LaneInstance> lanes, const std::string& raw_file,
                            double y_step) {
  LabelRecord rec;
  rec.raw_file = raw_file;
  for (double y = 0.0; y < kXYSourceHeight; y += y_step) rec.h_samples.push_back(y);

  const double sx = kXYSourceWidth / kInputWidth;
  const double sy = kXYSourceHeight / kInputHeight;
  for (const auto& lane : lanes) {
    std::vector<KeyPoint> pts = lane.points;
    std::sort(pts.begin(), pts.end(),
              [](const KeyPoint& a, const KeyPoint& b) { return a.y < b.y; });
    std::vector<double> xs(rec.h_samples.size(), kXYMissing);
    if (pts.size() >= 2) {
      const double y_lo = pts.front().y * sy, y_hi = pts.back().y * sy;
      for (std::size_t i = 0; i < rec.h_samples.size(); ++i) {
        const double y = rec.h_samples[i];
        if (y < y_lo || y > y_hi) continue;
        const double ny = y / sy;  // back to input-frame y
        auto it = std::lower_bound(pts.begin(), pts.end(), ny,
                                   [](const KeyPoint& p, double v) { return p.y < v; });
        double x;
        if (it == pts.begin()) {
          x = it->x;
        } else {
          const KeyPoint& b = *it;
          const KeyPoint& a = *(it - 1);
          x = (b.y == a.y) ? 0.5 * (a.x + b.x)
                           : a.x + (ny - a.y) / (b.y - a.y) * (b.x - a.x);
        }
        xs[i] = x * sx;
      }
    }
    rec.lanes_x.push_back(std::move(xs));
  }
  return rec;
}

Sample parse_tusimple(const std::string& json_line, const std::string& image_root) {
  const LabelRecord rec = parse_label_record(json_line);
  Sample s;
  s.source_id = rec.raw_file;
  s.lanes = record_to_lanes(rec);
  const std::filesystem::path path =
      image_root.empty() ? std::filesystem::path(rec.raw_file)
                         : std::filesystem::path(image_root) / rec.raw_file;
  if (!std::filesystem::exists(path)) {
    throw IoError("image file missing: " + path.string());
  }
  s.image = io::to_input_image(io::read_image(path.string()));
  return s;
}

}  // namespace keylane::data
