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
#include <doctest.h>

#include "keylane/core/grid.hpp"

using namespace keylane;

TEST_SUITE("grid") {

TEST_CASE("cell mapping is left-closed right-open") {
  CHECK(cell_of(0.0, 0.0) == std::pair{0, 0});
  CHECK(cell_of(7.999, 7.999) == std::pair{0, 0});
  CHECK(cell_of(8.0, 8.0) == std::pair{1, 1});
  CHECK(cell_of(511.999, 255.999) == std::pair{31, 63});
}

TEST_CASE("encode: mid-cell point") {
  // (28, 4) sits in cell (row 0, col 3), half a cell from its corner
  const std::vector<LaneInstance> lanes = {make_lane(1, {{28.0, 4.0}, {36.0, 12.0}})};
  const auto g = encode_label(lanes);
  CHECK(g.exist(0, 3) == 1);
  CHECK(g.offset_x(0, 3) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g.offset_y(0, 3) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g.instance(0, 3) == 1);
}

TEST_CASE("encode: origin corner") {
  const std::vector<LaneInstance> lanes = {make_lane(1, {{0.0, 0.0}, {100.0, 100.0}})};
  const auto g = encode_label(lanes);
  CHECK(g.exist(0, 0) == 1);
  CHECK(g.offset_x(0, 0) == 0.0);
  CHECK(g.offset_y(0, 0) == 0.0);
}

TEST_CASE("encode: same-lane collision averages the points") {
  // both points land in cell (1, 3); their mean is (27, 9)
  const std::vector<LaneInstance> lanes = {make_lane(1, {{24.0, 8.0}, {30.0, 10.0}})};
  const auto g = encode_label(lanes);
  CHECK(g.n_exist() == 1);
  CHECK(g.exist(1, 3) == 1);
  CHECK(g.offset_x(1, 3) == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(g.offset_y(1, 3) == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("encode: cross-lane collision keeps the point nearer the cell center") {
  // cell (0, 0) center is (4, 4); lane 2's point is nearer
  const std::vector<LaneInstance> lanes = {
      make_lane(1, {{0.5, 0.5}, {100.0, 100.0}}),
      make_lane(2, {{3.5, 3.5}, {200.0, 200.0}}),
  };
  const auto g = encode_label(lanes);
  CHECK(g.instance(0, 0) == 2);
  CHECK(g.offset_x(0, 0) == doctest::Approx(3.5 / 8.0));
}

TEST_CASE("encode: cross-lane tie breaks toward the smaller lane index") {
  // symmetric about the center of cell (0, 0)
  const std::vector<LaneInstance> lanes = {
      make_lane(1, {{3.0, 4.0}, {100.0, 100.0}}),
      make_lane(2, {{5.0, 4.0}, {200.0, 200.0}}),
  };
  const auto g = encode_label(lanes);
  CHECK(g.instance(0, 0) == 1);
}

TEST_CASE("encode: rejects short lanes and out-of-frame points") {
  CHECK_THROWS_AS(encode_label(std::vector<LaneInstance>{make_lane(1, {{1.0, 1.0}})}),
                  LabelError);
  CHECK_THROWS_AS(
      encode_label(std::vector<LaneInstance>{make_lane(1, {{-1.0, 1.0}, {2.0, 2.0}})}),
      LabelError);
  CHECK_THROWS_AS(
      encode_label(std::vector<LaneInstance>{make_lane(1, {{512.0, 1.0}, {2.0, 2.0}})}),
      LabelError);
}

TEST_CASE("encode: instance plane marks exactly the exist cells") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<LaneInstance> lanes;
    const int n = rng.uniform_int(1, 4);
    for (int l = 0; l < n; ++l) {
      LaneInstance lane;
      for (int p = 0; p < 8; ++p) {
        lane.points.push_back({rng.uniform(0.0, 512.0), rng.uniform(0.0, 256.0), l + 1});
      }
      lanes.push_back(lane);
    }
    const auto g = encode_label(lanes);
    for (int r = 0; r < kGridRows; ++r) {
      for (int c = 0; c < kGridCols; ++c) {
        CHECK((g.instance(r, c) > 0) == (g.exist(r, c) == 1));
        if (g.exist(r, c)) {
          CHECK(g.offset_x(r, c) >= 0.0);
          CHECK(g.offset_x(r, c) < 1.0);
          CHECK(g.offset_y(r, c) >= 0.0);
          CHECK(g.offset_y(r, c) < 1.0);
        }
      }
    }
  }
}

TEST_CASE("decode: paper example and corner") {
  auto [x, y] = decode_cell(0, 3, 0.5, 0.5);
  CHECK(x == 28.0);
  CHECK(y == 4.0);
  auto [x0, y0] = decode_cell(0, 0, 0.0, 0.0);
  CHECK(x0 == 0.0);
  CHECK(y0 == 0.0);
  CHECK_THROWS_AS(decode_cell(-1, 0, 0.0, 0.0), BoundsError);
  CHECK_THROWS_AS(decode_cell(0, 64, 0.0, 0.0), BoundsError);
}

TEST_CASE("round trip: encode then decode reproduces coordinates exactly") {
  Rng rng(11);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    // two points far apart so each owns its cell
    const double x1 = rng.uniform(0.0, 256.0), y1 = rng.uniform(0.0, 128.0);
    const double x2 = x1 + 200.0, y2 = y1 + 100.0;
    const std::vector<LaneInstance> lanes = {make_lane(1, {{x1, y1}, {x2, y2}})};
    const auto g = encode_label(lanes);
    for (auto [px, py] : {std::pair{x1, y1}, std::pair{x2, y2}}) {
      const auto [r, c] = cell_of(px, py);
      const auto [dx, dy] = decode_cell(r, c, g.offset_x(r, c), g.offset_y(r, c));
      // bit-exact: x/8 - col loses nothing, (col + off) * 8 restores it
      CHECK(dx == px);
      CHECK(dy == py);
      ++checked;
    }
  }
  CHECK(checked == 200);
}

}  // TEST_SUITE
