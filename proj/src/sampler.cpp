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
#include "keylane/data/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace keylane::data {

namespace {

// without-replacement uniform draw of k indices out of `from`, consuming them
std::vector<int> draw(std::vector<int>& from, int k, Rng& rng) {
  std::vector<int> out;
  for (int i = 0; i < k && !from.empty(); ++i) {
    const int j = rng.uniform_int(0, static_cast<int>(from.size()) - 1);
    out.push_back(from[j]);
    from.erase(from.begin() + j);
  }
  return out;
}

}  // namespace

std::vector<int> sample_batch_indices(std::span<const double> last_losses, int batch_size,
                                      double hard_fraction, Rng& rng) {
  const int n = static_cast<int>(last_losses.size());
  if (n == 0) throw Error("sample_batch: empty pool");
  if (batch_size < 1 || batch_size > n) {
    throw Error("sample_batch: batch_size " + std::to_string(batch_size) +
                " exceeds pool size " + std::to_string(n));
  }
  if (hard_fraction < 0.0 || hard_fraction > 1.0) {
    throw ConfigError("sample_batch: hard_fraction must lie in [0,1]");
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return last_losses[a] > last_losses[b];
  });

  const int decile = std::max(1, static_cast<int>(std::ceil(0.1 * n)));
  std::vector<int> hard_pool(order.begin(), order.begin() + decile);
  std::vector<int> rest(order.begin() + decile, order.end());

  const int want_hard = std::min(batch_size,
                                 static_cast<int>(std::lround(hard_fraction * batch_size)));
  std::vector<int> batch;
  if (want_hard >= static_cast<int>(hard_pool.size())) {
    batch = hard_pool;  // every hard sample is in
    hard_pool.clear();
  } else {
    batch = draw(hard_pool, want_hard, rng);
  }
  // the uniform remainder draws from everything not yet selected
  std::vector<int> remaining = rest;
  remaining.insert(remaining.end(), hard_pool.begin(), hard_pool.end());
  const auto fill = draw(remaining, batch_size - static_cast<int>(batch.size()), rng);
  batch.insert(batch.end(), fill.begin(), fill.end());
  return batch;
}

std::vector<Sample> sample_batch(std::span<const Sample> pool, int batch_size,
                                 double hard_fraction, Rng& rng) {
  std::vector<double> losses(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) losses[i] = pool[i].last_loss;
  std::vector<Sample> out;
  for (int idx : sample_batch_indices(losses, batch_size, hard_fraction, rng)) {
    out.push_back(pool[idx]);
  }
  return out;
}

}  // namespace keylane::data
