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

#include <functional>
#include <vector>

#include "keylane/core/types.hpp"
#include "keylane/loss/losses.hpp"
#include "keylane/net/model.hpp"

namespace testutil {

using keylane::GroundTruthGrid;
using keylane::PredictionGrid;
using keylane::Rng;

template <typename S>
void randomize(keylane::net::Tensor4<S>& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = static_cast<S>(rng.uniform(lo, hi));
}

// |a-b| relative to max(1, |a|, |b|): tolerant of near-zero gradients.
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Central finite difference of an arbitrary scalar function w.r.t. *theta.
template <typename S>
double fd_scalar(const std::function<double()>& f, S* theta, double h) {
  const S saved = *theta;
  *theta = static_cast<S>(saved + h);
  const double up = f();
  *theta = static_cast<S>(saved - h);
  const double down = f();
  *theta = saved;
  return (up - down) / (2.0 * h);
}

// Random label grid with the requested number of lane instances; every lane
// gets a handful of cells so the feature loss sees real structure.
inline GroundTruthGrid random_gt(Rng& rng, int instances, int cells_per_lane = 16) {
  GroundTruthGrid g = GroundTruthGrid::zeros();
  for (int lane = 1; lane <= instances; ++lane) {
    for (int k = 0; k < cells_per_lane; ++k) {
      const int r = rng.uniform_int(0, keylane::kGridRows - 1);
      const int c = rng.uniform_int(0, keylane::kGridCols - 1);
      if (g.exist(r, c)) continue;
      g.exist(r, c) = 1;
      g.offset_x(r, c) = rng.uniform();
      g.offset_y(r, c) = rng.uniform();
      g.instance(r, c) = lane;
    }
  }
  return g;
}

// Random prediction grid; confidences stay clear of the 0.01 background gate
// and embedding pair distances clear of the margin kink so central
// differences remain valid.
template <typename S>
PredictionGrid<S> random_pred(Rng& rng, const GroundTruthGrid& gt, double margin = 1.0,
                              double kink_slack = 1e-4) {
  PredictionGrid<S> p = PredictionGrid<S>::zeros();
  for (int r = 0; r < keylane::kGridRows; ++r) {
    for (int c = 0; c < keylane::kGridCols; ++c) {
      double conf = rng.uniform();
      while (std::abs(conf - keylane::loss::kBackgroundGate) < 1e-3) conf = rng.uniform();
      p.confidence(r, c) = static_cast<S>(conf);
      p.offset[0](r, c) = static_cast<S>(rng.uniform());
      p.offset[1](r, c) = static_cast<S>(rng.uniform());
      for (int d = 0; d < keylane::kEmbeddingDim; ++d) {
        p.embedding[d](r, c) = static_cast<S>(rng.uniform(-1.0, 1.0));
      }
    }
  }
  // nudge embedding pairs that sit on the hinge kink
  for (int guard = 0; guard < 64; ++guard) {
    bool clean = true;
    const auto cells = keylane::loss::detail::exist_cells(p, gt);
    for (std::size_t i = 0; i < cells.size() && clean; ++i) {
      for (std::size_t j = i + 1; j < cells.size(); ++j) {
        const double d = (cells[i].f - cells[j].f).template cast<double>().norm();
        if (std::abs(d - margin) < kink_slack || (d < kink_slack && i != j)) {
          for (int k = 0; k < keylane::kEmbeddingDim; ++k) {
            p.embedding[k](cells[j].r, cells[j].c) = static_cast<S>(rng.uniform(-1.0, 1.0));
          }
          clean = false;
          break;
        }
      }
    }
    if (clean) break;
  }
  return p;
}

// Per-image slice of a batched forward pass (mirrors the trainer's float
// version for arbitrary scalar type).
template <typename S>
keylane::loss::ModuleOutputs<S> slice_outputs(const typename keylane::net::Model<S>::Outputs& out,
                                              int sample) {
  keylane::loss::ModuleOutputs<S> mo;
  for (const auto& mod : out.mods) {
    PredictionGrid<S> g = PredictionGrid<S>::zeros();
    const int hw = mod.conf.h * mod.conf.w;
    for (int i = 0; i < hw; ++i) {
      const int r = i / keylane::kGridCols, c = i % keylane::kGridCols;
      g.confidence(r, c) = mod.conf.sample(sample)[i];
      for (int d = 0; d < 2; ++d) g.offset[d](r, c) = mod.off.sample(sample)[d * hw + i];
      for (int d = 0; d < keylane::kEmbeddingDim; ++d) {
        g.embedding[d](r, c) = mod.emb.sample(sample)[d * hw + i];
      }
    }
    mo.grids.push_back(std::move(g));
    keylane::loss::AttnMat<S> a(mod.attn.c, mod.attn.h * mod.attn.w);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = mod.attn.sample(sample)[i];
    mo.activations.push_back(std::move(a));
  }
  return mo;
}

}  // namespace testutil
