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
#include "keylane/io/overlay.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace keylane::io {

namespace {

constexpr std::array<std::array<float, 3>, 6> kPalette = {{
    {1.0f, 0.2f, 0.2f},
    {0.2f, 1.0f, 0.2f},
    {0.3f, 0.5f, 1.0f},
    {1.0f, 1.0f, 0.2f},
    {1.0f, 0.3f, 1.0f},
    {0.2f, 1.0f, 1.0f},
}};

void put_pixel(Image& im, int x, int y, const std::array<float, 3>& color) {
  if (x < 0 || x >= im.width || y < 0 || y >= im.height) return;
  for (int c = 0; c < std::min(3, im.channels); ++c) im.at(c, y, x) = color[c];
}

void draw_disc(Image& im, double cx, double cy, int radius, const std::array<float, 3>& color) {
  const int x0 = static_cast<int>(std::floor(cx)) - radius;
  const int y0 = static_cast<int>(std::floor(cy)) - radius;
  for (int y = y0; y <= y0 + 2 * radius + 1; ++y) {
    for (int x = x0; x <= x0 + 2 * radius + 1; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      if (dx * dx + dy * dy <= radius * radius + 0.25) put_pixel(im, x, y, color);
    }
  }
}

void draw_segment(Image& im, double x1, double y1, double x2, double y2,
                  const std::array<float, 3>& color) {
  const double len = std::hypot(x2 - x1, y2 - y1);
  const int steps = std::max(1, static_cast<int>(std::ceil(len)));
  for (int s = 0; s <= steps; ++s) {
    const double t = static_cast<double>(s) / steps;
    put_pixel(im, static_cast<int>(std::lround(x1 + t * (x2 - x1))),
              static_cast<int>(std::lround(y1 + t * (y2 - y1))), color);
  }
}

}  // namespace

void draw_lanes(Image& im, std::span<const LaneInstance> lanes, int point_radius) {
  for (std::size_t li = 0; li < lanes.size(); ++li) {
    const auto& color = kPalette[li % kPalette.size()];
    const auto& pts = lanes[li].points;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      draw_segment(im, pts[i].x, pts[i].y, pts[i + 1].x, pts[i + 1].y, color);
    }
    for (const KeyPoint& p : pts) draw_disc(im, p.x, p.y, point_radius, color);
  }
}

}  // namespace keylane::io
