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
#include <vector>

#include "keylane/data/dataset.hpp"

namespace keylane::data {

// Hard-sample-weighted batch selection: hard_fraction of the batch comes from
// the top decile of last_loss (all of it when the decile is smaller), the rest
// uniformly from the remaining pool; no index repeats within a batch.
std::vector<int> sample_batch_indices(std::span<const double> last_losses, int batch_size,
                                      double hard_fraction, Rng& rng);

std::vector<Sample> sample_batch(std::span<const Sample> pool, int batch_size,
                                 double hard_fraction, Rng& rng);

}  // namespace keylane::data
