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
#include "keylane/data/culane.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "keylane/io/image.hpp"

namespace keylane::data {

std::vector<LaneInstance> parse_polyline_lines(const std::string& text) {
  std::vector<LaneInstance> lanes;
  std::istringstream stream(text);
  std::string line;
  const double sx = kInputWidth / kPolylineSourceWidth;
  const double sy = kInputHeight / kPolylineSourceHeight;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (!ls.eof()) {
      throw ParseError("lines file: non-numeric token on line " + std::to_string(line_no));
    }
    if (vals.empty()) continue;
    if (vals.size() % 2 != 0) {
      throw ParseError("lines file: odd number of coordinates on line " +
                       std::to_string(line_no));
    }
    LaneInstance lane;
    const int id = static_cast<int>(lanes.size()) + 1;
    for (std::size_t i = 0; i < vals.size(); i += 2) {
      const double x = vals[i] * sx;
      const double y = vals[i + 1] * sy;
      if (x < 0.0 || x >= kInputWidth || y < 0.0 || y >= kInputHeight) continue;
      lane.points.push_back({x, y, id});
    }
    if (lane.points.size() >= 2) lanes.push_back(std::move(lane));
  }
  return lanes;
}

std::string lanes_to_polyline_lines(std::span<const LaneInstance> lanes) {
  std::ostringstream out;
  const double sx = kPolylineSourceWidth / kInputWidth;
  const double sy = kPolylineSourceHeight / kInputHeight;
  for (const auto& lane : lanes) {
    bool first = true;
    for (const KeyPoint& p : lane.points) {
      if (!first) out << " ";
      out << p.x * sx << " " << p.y * sy;
      first = false;
    }
    out << "\n";
  }
  return out.str();
}

Sample parse_culane(const std::string& image_path, const std::string& lines_path) {
  Sample s;
  s.source_id = image_path;
  if (!std::filesystem::exists(image_path)) {
    throw IoError("image file missing: " + image_path);
  }
  s.image = io::to_input_image(io::read_image(image_path));
  if (std::filesystem::exists(lines_path)) {
    std::ifstream in(lines_path);
    std::stringstream buf;
    buf << in.rdbuf();
    s.lanes = parse_polyline_lines(buf.str());
  }
  return s;
}

}  // namespace keylane::data
