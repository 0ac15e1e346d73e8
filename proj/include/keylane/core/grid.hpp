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

#include <map>
#include <span>
#include <utility>

#include "keylane/core/types.hpp"

namespace keylane {

// Cell of a pixel position; cells are left-closed/right-open 8x8 blocks.
inline std::pair<int, int> cell_of(double x, double y) {
  return {static_cast<int>(std::floor(y / kCellSize)), static_cast<int>(std::floor(x / kCellSize))};
}

// Sub-cell offsets in [0, 1). Exact in floating point: x/8 is a power-of-two
// divide and the subtraction of the integer part loses no bits.
inline std::pair<double, double> cell_offsets(double x, double y, int row, int col) {
  return {x / kCellSize - col, y / kCellSize - row};
}

// Pixel position of a cell-plus-offset pair. (col + off) * 8 reproduces the
// encoded coordinate bit for bit when the offset came from cell_offsets.
inline std::pair<double, double> decode_cell(int row, int col, double off_x, double off_y) {
  if (row < 0 || row >= kGridRows || col < 0 || col >= kGridCols) {
    throw BoundsError("decode_cell: cell (" + std::to_string(row) + "," + std::to_string(col) +
                      ") outside the 32x64 grid");
  }
  return {(col + off_x) * kCellSize, (row + off_y) * kCellSize};
}

// Rasterizes lane instances onto the 32x64 training grid.
//
// Collision policy: points of the same lane landing in one cell are averaged
// first; when different lanes still collide, the representative nearer the
// cell center wins, ties broken by the smaller lane index. One confidence
// channel can carry only one key point per cell.
inline GroundTruthGrid encode_label(std::span<const LaneInstance> lanes) {
  struct Accum {
    double sx = 0.0, sy = 0.0;
    int n = 0;
  };
  // (row, col, lane index) -> accumulated points
  std::map<std::tuple<int, int, int>, Accum> cells;

  for (std::size_t li = 0; li < lanes.size(); ++li) {
    const LaneInstance& lane = lanes[li];
    if (lane.points.size() < 2) {
      throw LabelError("lane " + std::to_string(li + 1) + " has fewer than 2 points");
    }
    for (const KeyPoint& p : lane.points) {
      if (!p.inside_frame()) {
        throw LabelError("lane " + std::to_string(li + 1) + " point (" + std::to_string(p.x) +
                         "," + std::to_string(p.y) + ") outside the 512x256 frame");
      }
      auto [row, col] = cell_of(p.x, p.y);
      Accum& a = cells[{row, col, static_cast<int>(li)}];
      a.sx += p.x;
      a.sy += p.y;
      a.n += 1;
    }
  }

  GroundTruthGrid grid = GroundTruthGrid::zeros();
  // Best candidate per cell: squared distance to the cell center.
  Plane<double> best = Plane<double>::Constant(kGridRows, kGridCols, -1.0);
  for (const auto& [key, acc] : cells) {
    const auto [row, col, lane_idx] = key;
    const double mx = acc.sx / acc.n;
    const double my = acc.sy / acc.n;
    const double cx = (col + 0.5) * kCellSize;
    const double cy = (row + 0.5) * kCellSize;
    const double d2 = (mx - cx) * (mx - cx) + (my - cy) * (my - cy);
    // std::map iterates lane indices in ascending order per cell, so a strict
    // '<' keeps the smaller lane index on ties.
    if (best(row, col) >= 0.0 && d2 >= best(row, col)) continue;
    best(row, col) = d2;
    auto [ox, oy] = cell_offsets(mx, my, row, col);
    grid.exist(row, col) = 1;
    grid.offset_x(row, col) = ox;
    grid.offset_y(row, col) = oy;
    grid.instance(row, col) = lane_idx + 1;
  }
  return grid;
}

}  // namespace keylane
