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

#include "keylane/core/types.hpp"

namespace keylane::data {

// Inserts linearly interpolated points between consecutive annotations so no
// x-gap exceeds `step` pixels. Original points and their order are preserved;
// the result is a fixed point of the operation.
LaneInstance densify(const LaneInstance& lane, double step = 10.0);

}  // namespace keylane::data
