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
#include "keylane/data/dataset.hpp"

#include <filesystem>
#include <fstream>

#include "keylane/data/culane.hpp"
#include "keylane/data/tusimple.hpp"
#include "keylane/io/image.hpp"

namespace keylane::data {

namespace fs = std::filesystem;

void save_dataset(const std::string& dir, std::span<const Sample> samples) {
  fs::create_directories(fs::path(dir) / "images");
  std::ofstream labels(fs::path(dir) / "labels.json");
  if (!labels) throw IoError("cannot write label file under " + dir);
  char name[32];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::snprintf(name, sizeof(name), "images/%06zu.ppm", i);
    io::write_image((fs::path(dir) / name).string(), samples[i].image);
    labels << label_record_to_json(lanes_to_record(samples[i].lanes, name)) << "\n";
  }
  if (!labels) throw IoError("short write on label file under " + dir);
}

std::vector<Sample> load_xy_dataset(const std::string& label_file, const std::string& image_root) {
  std::ifstream in(label_file);
  if (!in) throw IoError("cannot open label file: " + label_file);
  const std::string root =
      image_root.empty() ? fs::path(label_file).parent_path().string() : image_root;
  std::vector<Sample> samples;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    samples.push_back(parse_tusimple(line, root));
  }
  return samples;
}

std::vector<Sample> load_polyline_dataset(const std::string& list_file, const std::string& root) {
  std::ifstream in(list_file);
  if (!in) throw IoError("cannot open list file: " + list_file);
  const std::string base = root.empty() ? fs::path(list_file).parent_path().string() : root;
  std::vector<Sample> samples;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    std::string rel = line;
    if (!rel.empty() && rel.front() == '/') rel.erase(rel.begin());
    const fs::path image_path = fs::path(base) / rel;
    fs::path lines_path = image_path;
    lines_path.replace_extension("");
    lines_path += ".lines.txt";
    samples.push_back(parse_culane(image_path.string(), lines_path.string()));
  }
  return samples;
}

}  // namespace keylane::data
