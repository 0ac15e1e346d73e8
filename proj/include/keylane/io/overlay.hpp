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

#include "keylane/core/types.hpp"

namespace keylane::io {

// Draws lane curves and point markers over the image, one palette color per
// instance. Coordinates are in the image's own pixel space.
void draw_lanes(Image& im, std::span<const LaneInstance> lanes, int point_radius = 2);

}  // namespace keylane::io
