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
#include "keylane/data/augment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace keylane::data {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kMaxShiftPx = 50;
constexpr double kMaxRotateDeg = 10.0;
constexpr double kNoiseAmp = 0.05;

bool has(std::span<const AugmentOp> ops, AugmentOp op) {
  return std::find(ops.begin(), ops.end(), op) != ops.end();
}

void drop_outside_and_prune(std::vector<LaneInstance>& lanes) {
  std::vector<LaneInstance> kept;
  for (auto& lane : lanes) {
    LaneInstance filtered;
    for (const KeyPoint& p : lane.points) {
      if (p.inside_frame()) filtered.points.push_back(p);
    }
    if (filtered.points.size() >= 2) kept.push_back(std::move(filtered));
  }
  lanes = std::move(kept);
}

void flip(Sample& s) {
  Image out = s.image;
  for (int c = 0; c < s.image.channels; ++c) {
    for (int y = 0; y < s.image.height; ++y) {
      for (int x = 0; x < s.image.width; ++x) {
        out.at(c, y, x) = s.image.at(c, y, s.image.width - 1 - x);
      }
    }
  }
  s.image = std::move(out);
  for (auto& lane : s.lanes) {
    for (auto& p : lane.points) p.x = kInputWidth - p.x;
  }
}

void translate(Sample& s, int dx, int dy) {
  Image out = Image::zeros(s.image.width, s.image.height, s.image.channels);
  for (int c = 0; c < s.image.channels; ++c) {
    for (int y = 0; y < s.image.height; ++y) {
      const int sy = y - dy;
      if (sy < 0 || sy >= s.image.height) continue;
      for (int x = 0; x < s.image.width; ++x) {
        const int sx = x - dx;
        if (sx < 0 || sx >= s.image.width) continue;
        out.at(c, y, x) = s.image.at(c, sy, sx);
      }
    }
  }
  s.image = std::move(out);
  for (auto& lane : s.lanes) {
    for (auto& p : lane.points) {
      p.x += dx;
      p.y += dy;
    }
  }
}

float sample_bilinear(const Image& im, int c, double x, double y) {
  if (x < 0.0 || y < 0.0 || x > im.width - 1 || y > im.height - 1) return 0.0f;
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, im.width - 1);
  const int y1 = std::min(y0 + 1, im.height - 1);
  const double wx = x - x0, wy = y - y0;
  return static_cast<float>((1 - wy) * ((1 - wx) * im.at(c, y0, x0) + wx * im.at(c, y0, x1)) +
                            wy * ((1 - wx) * im.at(c, y1, x0) + wx * im.at(c, y1, x1)));
}

void rotate(Sample& s, double degrees) {
  const double rad = degrees * kPi / 180.0;
  const double cs = std::cos(rad), sn = std::sin(rad);
  const double cx = s.image.width / 2.0, cy = s.image.height / 2.0;
  Image out = Image::zeros(s.image.width, s.image.height, s.image.channels);
  for (int y = 0; y < s.image.height; ++y) {
    for (int x = 0; x < s.image.width; ++x) {
      // inverse map: destination pixel pulled from the source rotated by -angle
      const double dx = x - cx, dy = y - cy;
      const double sx = cx + cs * dx + sn * dy;
      const double sy = cy - sn * dx + cs * dy;
      for (int c = 0; c < s.image.channels; ++c) {
        out.at(c, y, x) = sample_bilinear(s.image, c, sx, sy);
      }
    }
  }
  s.image = std::move(out);
  for (auto& lane : s.lanes) {
    for (auto& p : lane.points) {
      const double dx = p.x - cx, dy = p.y - cy;
      p.x = cx + cs * dx - sn * dy;
      p.y = cy + sn * dx + cs * dy;
    }
  }
}

void add_noise(Sample& s, Rng& rng) {
  for (float& v : s.image.data) {
    v = std::clamp(v + static_cast<float>(rng.uniform(-kNoiseAmp, kNoiseAmp)), 0.0f, 1.0f);
  }
}

void intensity(Sample& s, double gain) {
  for (float& v : s.image.data) v = std::clamp(v * static_cast<float>(gain), 0.0f, 1.0f);
}

void shadow(Sample& s, double floor_gain, double angle) {
  const double ux = std::cos(angle), uy = std::sin(angle);
  // projection range over the frame corners
  double lo = 1e30, hi = -1e30;
  for (int corner = 0; corner < 4; ++corner) {
    const double x = (corner & 1) ? s.image.width : 0.0;
    const double y = (corner & 2) ? s.image.height : 0.0;
    const double t = x * ux + y * uy;
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  const double span = std::max(hi - lo, 1e-9);
  for (int y = 0; y < s.image.height; ++y) {
    for (int x = 0; x < s.image.width; ++x) {
      const double t = (x * ux + y * uy - lo) / span;
      const float g = static_cast<float>(floor_gain + (1.0 - floor_gain) * t);
      for (int c = 0; c < s.image.channels; ++c) {
        s.image.at(c, y, x) = std::clamp(s.image.at(c, y, x) * g, 0.0f, 1.0f);
      }
    }
  }
}

}  // namespace

std::vector<AugmentOp> parse_augment_ops(const std::string& csv) {
  std::vector<AugmentOp> ops;
  std::istringstream in(csv);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
    if (tok.empty()) continue;
    if (tok == "flip") {
      ops.push_back(AugmentOp::kFlip);
    } else if (tok == "translate") {
      ops.push_back(AugmentOp::kTranslate);
    } else if (tok == "rotate") {
      ops.push_back(AugmentOp::kRotate);
    } else if (tok == "add_noise" || tok == "noise") {
      ops.push_back(AugmentOp::kAddNoise);
    } else if (tok == "intensity") {
      ops.push_back(AugmentOp::kIntensity);
    } else if (tok == "shadow") {
      ops.push_back(AugmentOp::kShadow);
    } else {
      throw ConfigError("unknown augmentation op '" + tok + "'");
    }
  }
  return ops;
}

Sample augment(const Sample& sample, std::span<const AugmentOp> ops, std::uint64_t seed) {
  Sample out = sample;
  Rng rng(mix_seed(seed, 0x617567ULL));
  if (has(ops, AugmentOp::kFlip)) flip(out);
  if (has(ops, AugmentOp::kTranslate)) {
    const int dx = rng.uniform_int(-kMaxShiftPx, kMaxShiftPx);
    const int dy = rng.uniform_int(-kMaxShiftPx, kMaxShiftPx);
    translate(out, dx, dy);
  }
  if (has(ops, AugmentOp::kRotate)) {
    rotate(out, rng.uniform(-kMaxRotateDeg, kMaxRotateDeg));
  }
  if (has(ops, AugmentOp::kAddNoise)) add_noise(out, rng);
  if (has(ops, AugmentOp::kIntensity)) intensity(out, rng.uniform(0.5, 1.5));
  if (has(ops, AugmentOp::kShadow)) shadow(out, rng.uniform(0.4, 1.0), rng.uniform(0.0, 2.0 * kPi));
  drop_outside_and_prune(out.lanes);
  return out;
}

}  // namespace keylane::data
