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
#include <string>
#include <vector>

#include "keylane/data/dataset.hpp"

namespace keylane::data {

enum class AugmentOp { kFlip, kTranslate, kRotate, kAddNoise, kIntensity, kShadow };

// Parses a comma-separated op list ("flip,rotate,shadow"); throws ConfigError
// on unknown names. Empty string -> empty list.
std::vector<AugmentOp> parse_augment_ops(const std::string& csv);

// Applies the selected ops in canonical order (flip, translate, rotate, noise,
// intensity, shadow), deterministically for a given seed. Geometric ops move
// image and labels together; points leaving the frame are dropped and lanes
// reduced below 2 points are removed. Magnitudes: translation within +-50 px,
// rotation within +-10 degrees, additive noise +-0.05, intensity gain
// 0.5..1.5, shadow ramp bottoming out between 0.4 and 1.0.
Sample augment(const Sample& sample, std::span<const AugmentOp> ops, std::uint64_t seed);

}  // namespace keylane::data
