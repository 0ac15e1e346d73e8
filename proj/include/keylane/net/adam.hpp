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
#include <string>
#include <vector>

#include "keylane/net/tensor.hpp"

namespace keylane::net {

// Adaptive moment estimation over a named parameter list. Moments live here
// keyed by name so they survive checkpoint round trips.
template <typename S>
struct Adam {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;

  std::map<std::string, std::pair<Vec<S>, Vec<S>>> moments;  // name -> (m, v)

  void step(const std::vector<ParamRef<S>>& params) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (const auto& p : params) {
      auto& [m, v] = moments[p.name];
      if (m.size() != p.value->size()) {
        m.setZero(p.value->size());
        v.setZero(p.value->size());
      }
      const auto& g = *p.grad;
      m = static_cast<S>(beta1) * m + static_cast<S>(1.0 - beta1) * g;
      v.array() = static_cast<S>(beta2) * v.array() +
                  static_cast<S>(1.0 - beta2) * g.array().square();
      p.value->array() -= static_cast<S>(lr) *
                          (m.array() / static_cast<S>(bc1)) /
                          ((v.array() / static_cast<S>(bc2)).sqrt() + static_cast<S>(eps));
    }
  }
};

}  // namespace keylane::net
