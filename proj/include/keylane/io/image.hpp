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

#include <string>

#include "keylane/core/types.hpp"

namespace keylane::io {

// Reads a binary PPM/PGM, PNG or JPEG file (the latter two when built against
// libpng/libjpeg) into a planar RGB float image in [0,1]. Throws IoError on
// missing files and ParseError on malformed content.
Image read_image(const std::string& path);

// Writes .ppm always, .png when available. Values are clamped and quantized
// to 8 bits.
void write_image(const std::string& path, const Image& im);

Image resize_bilinear(const Image& im, int out_w, int out_h);

// Ingestion: resize to the fixed 512x256 input frame and clamp into [0,1].
Image to_input_image(const Image& im);

}  // namespace keylane::io
