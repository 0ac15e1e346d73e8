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
#include "keylane/data/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace keylane::data {

namespace {

constexpr double kStripHalfWidth = 2.5;
constexpr double kStripBrightness = 0.88;
constexpr double kArcStep = 10.0;
constexpr double kMinLaneSeparation = 56.0;

struct LaneCurve {
  // x(y) = x_anchor + slope * (y - y_ref) + curve * (y - y_ref)^2, y_ref = 255
  double x_anchor = 0.0;
  double slope = 0.0;
  double curve = 0.0;
  double y_top = 0.0;

  double x_at(double y) const {
    const double d = y - (kInputHeight - 1.0);
    return x_anchor + slope * d + curve * d * d;
  }
};

bool curve_in_frame(const LaneCurve& lc) {
  for (double y = lc.y_top; y <= kInputHeight - 1.0; y += 4.0) {
    const double x = lc.x_at(y);
    if (x < 8.0 || x > kInputWidth - 9.0) return false;
  }
  return true;
}

}  // namespace

Sample generate_synthetic(const SyntheticSceneConfig& config) {
  config.validate();
  Rng rng(mix_seed(config.seed, 0x73796e7468ULL));

  Sample s;
  s.source_id = "synthetic/" + std::to_string(config.seed);
  s.image = Image::zeros(kInputWidth, kInputHeight, 3);

  // textured background: mild vertical gradient plus seeded noise
  for (int y = 0; y < kInputHeight; ++y) {
    const float base = 0.10f + 0.08f * static_cast<float>(y) / kInputHeight;
    for (int x = 0; x < kInputWidth; ++x) {
      const float n = static_cast<float>(config.noise * rng.uniform(-0.15, 0.15));
      const float v = std::clamp(base + n, 0.0f, 0.45f);
      for (int c = 0; c < 3; ++c) s.image.at(c, y, x) = v;
    }
  }

  const int lane_count = rng.uniform_int(config.lane_count_min, config.lane_count_max);

  // lane anchors spread across the bottom edge, slight jitter, re-drawn until
  // the whole curve stays in frame
  std::vector<LaneCurve> curves;
  for (int i = 0; i < lane_count; ++i) {
    LaneCurve lc;
    for (int attempt = 0; attempt < 32; ++attempt) {
      lc.x_anchor = (i + 1.0) / (lane_count + 1.0) * kInputWidth + rng.uniform(-16.0, 16.0);
      lc.slope = config.curvature > 0.0
                     ? rng.uniform(-1.0, 1.0) * config.curvature * 128.0
                     : 0.0;
      lc.curve = config.curvature > 0.0 ? rng.uniform(-config.curvature, config.curvature) : 0.0;
      lc.y_top = rng.uniform(48.0, 112.0);
      bool separated = true;
      for (const auto& other : curves) {
        if (std::abs(other.x_anchor - lc.x_anchor) < kMinLaneSeparation) separated = false;
      }
      if (separated && curve_in_frame(lc)) break;
      lc.slope = 0.0;
      lc.curve = 0.0;  // straight fallback keeps the draw bounded
    }
    curves.push_back(lc);
  }

  // strips, anti-aliased by per-pixel coverage of the half-width band
  for (const LaneCurve& lc : curves) {
    const double brightness =
        kStripBrightness + config.noise * rng.uniform(-0.08, 0.08);
    for (int y = static_cast<int>(std::ceil(lc.y_top)); y < kInputHeight; ++y) {
      const double cx = lc.x_at(y);
      const int x_lo = std::max(0, static_cast<int>(std::floor(cx - kStripHalfWidth - 1.0)));
      const int x_hi =
          std::min(kInputWidth - 1, static_cast<int>(std::ceil(cx + kStripHalfWidth + 1.0)));
      for (int x = x_lo; x <= x_hi; ++x) {
        const double cov =
            std::clamp(kStripHalfWidth + 0.5 - std::abs(x + 0.5 - cx), 0.0, 1.0);
        if (cov <= 0.0) continue;
        for (int c = 0; c < 3; ++c) {
          const float v = s.image.at(c, y, x);
          s.image.at(c, y, x) = v + static_cast<float>(cov * (brightness - v));
        }
      }
    }
  }

  // occluders drawn over everything, background-colored
  for (const LaneCurve& lc : curves) {
    if (!(rng.uniform() < config.occlusion)) continue;
    const double oy = rng.uniform(lc.y_top, kInputHeight - 40.0);
    const double ox = lc.x_at(oy) + rng.uniform(-10.0, 10.0);
    const int w = rng.uniform_int(20, 60);
    const int h = rng.uniform_int(20, 60);
    for (int y = std::max(0, static_cast<int>(oy)); y < std::min(kInputHeight, static_cast<int>(oy) + h); ++y) {
      for (int x = std::max(0, static_cast<int>(ox) - w / 2);
           x < std::min(kInputWidth, static_cast<int>(ox) + w / 2); ++x) {
        for (int c = 0; c < 3; ++c) s.image.at(c, y, x) = 0.22f;
      }
    }
  }

  // center-lines sampled every 10 px of arc length
  int id = 0;
  for (const LaneCurve& lc : curves) {
    ++id;
    LaneInstance lane;
    double y = lc.y_top;
    double acc = kArcStep;  // emit the first point immediately
    const double dy = 0.25;
    while (y <= kInputHeight - 1.0 + 1e-9) {
      if (acc >= kArcStep - 1e-9) {
        lane.points.push_back({lc.x_at(y), y, id});
        acc = 0.0;
      }
      const double slope = lc.slope + 2.0 * lc.curve * (y - (kInputHeight - 1.0));
      acc += dy * std::sqrt(1.0 + slope * slope);
      y += dy;
    }
    if (lane.points.size() >= 2) s.lanes.push_back(std::move(lane));
  }
  return s;
}

std::vector<Sample> generate_synthetic_pool(const SyntheticSceneConfig& config, int count) {
  std::vector<Sample> pool;
  pool.reserve(count);
  for (int i = 0; i < count; ++i) {
    SyntheticSceneConfig c = config;
    c.seed = mix_seed(config.seed, 0x706f6f6cULL + static_cast<std::uint64_t>(i));
    Sample s = generate_synthetic(c);
    s.source_id = "synthetic/" + std::to_string(config.seed) + "/" + std::to_string(i);
    pool.push_back(std::move(s));
  }
  return pool;
}

}  // namespace keylane::data
