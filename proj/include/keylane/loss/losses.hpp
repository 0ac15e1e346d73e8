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

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <vector>

#include "keylane/core/types.hpp"

namespace keylane::loss {

// Confidence cells whose value stays at or below this bound only feel the
// regularizer, not the main background penalty.
inline constexpr double kBackgroundGate = 0.01;
inline constexpr double kBackgroundRegWeight = 1e-5;

template <typename S>
using AttnMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-image prediction bundle: one grid per active hourglass module plus the
// per-module distillation activations (channels x flattened bottom grid).
template <typename S>
struct ModuleOutputs {
  std::vector<PredictionGrid<S>> grids;
  std::vector<AttnMat<S>> activations;
};

template <typename S>
struct Breakdown {
  S exist = 0, non_exist = 0, offset = 0, feature = 0, distillation = 0, total = 0;
};

namespace detail {

template <typename S>
void check_grid(const PredictionGrid<S>& pred, const GroundTruthGrid& gt) {
  if (pred.confidence.rows() != gt.exist.rows() || pred.confidence.cols() != gt.exist.cols()) {
    throw ShapeError("loss: prediction/ground-truth grid shapes differ");
  }
  for (const auto& p : pred.offset) {
    if (p.rows() != gt.exist.rows() || p.cols() != gt.exist.cols()) {
      throw ShapeError("loss: offset plane shape mismatch");
    }
  }
  for (const auto& p : pred.embedding) {
    if (p.rows() != gt.exist.rows() || p.cols() != gt.exist.cols()) {
      throw ShapeError("loss: embedding plane shape mismatch");
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Confidence losses
// ---------------------------------------------------------------------------

// Mean squared confidence error over key-point cells; 0 on empty frames.
template <typename S>
S exist_loss(const PredictionGrid<S>& pred, const GroundTruthGrid& gt) {
  detail::check_grid(pred, gt);
  const int ne = gt.n_exist();
  if (ne == 0) return S(0);
  S acc = 0;
  for (Eigen::Index r = 0; r < gt.exist.rows(); ++r) {
    for (Eigen::Index c = 0; c < gt.exist.cols(); ++c) {
      if (!gt.exist(r, c)) continue;
      const S d = S(1) - pred.confidence(r, c);
      acc += d * d;
    }
  }
  return acc / static_cast<S>(ne);
}

template <typename S>
void exist_loss_grad(const PredictionGrid<S>& pred, const GroundTruthGrid& gt,
                     Plane<S>& g_conf, S scale) {
  detail::check_grid(pred, gt);
  const int ne = gt.n_exist();
  if (ne == 0) return;
  const S k = scale * S(2) / static_cast<S>(ne);
  for (Eigen::Index r = 0; r < gt.exist.rows(); ++r) {
    for (Eigen::Index c = 0; c < gt.exist.cols(); ++c) {
      if (!gt.exist(r, c)) continue;
      g_conf(r, c) += -k * (S(1) - pred.confidence(r, c));
    }
  }
}

// Background penalty on cells still above the 0.01 gate, plus a small
// regularizer over all background cells.
template <typename S>
S non_exist_loss(const PredictionGrid<S>& pred, const GroundTruthGrid& gt) {
  detail::check_grid(pred, gt);
  const int nn = gt.n_background();
  S main = 0, reg = 0;
  for (Eigen::Index r = 0; r < gt.exist.rows(); ++r) {
    for (Eigen::Index c = 0; c < gt.exist.cols(); ++c) {
      if (gt.exist(r, c)) continue;
      const S v = pred.confidence(r, c);
      if (v > static_cast<S>(kBackgroundGate)) main += v * v;
      reg += v * v;
    }
  }
  S out = static_cast<S>(kBackgroundRegWeight) * reg;
  if (nn > 0) out += main / static_cast<S>(nn);
  return out;
}

template <typename S>
void non_exist_loss_grad(const PredictionGrid<S>& pred, const GroundTruthGrid& gt,
                         Plane<S>& g_conf, S scale) {
  detail::check_grid(pred, gt);
  const int nn = gt.n_background();
  const S inv_nn = nn > 0 ? S(1) / static_cast<S>(nn) : S(0);
  for (Eigen::Index r = 0; r < gt.exist.rows(); ++r) {
    for (Eigen::Index c = 0; c < gt.exist.cols(); ++c) {
      if (gt.exist(r, c)) continue;
      const S v = pred.confidence(r, c);
      S g = S(2) * static_cast<S>(kBackgroundRegWeight) * v;
      if (v > static_cast<S>(kBackgroundGate)) g += S(2) * v * inv_nn;
      g_conf(r, c) += scale * g;
    }
  }
}

// ---------------------------------------------------------------------------
// Offset loss (key-point cells only)
// ---------------------------------------------------------------------------

template <typename S>
S offset_loss(const PredictionGrid<S>& pred, const GroundTruthGrid& gt) {
  detail::check_grid(pred, gt);
  const int ne = gt.n_exist();
  if (ne == 0) return S(0);
  S ax = 0, ay = 0;
  for (Eigen::Index r = 0; r < gt.exist.rows(); ++r) {
    for (Eigen::Index c = 0; c < gt.exist.cols(); ++c) {
      if (!gt.exist(r, c)) continue;
      const S dx = static_cast<S>(gt.offset_x(r, c)) - pred.offset[0](r, c);
      const S dy = static_cast<S>(gt.offset_y(r, c)) - pred.offset[1](r, c);
      ax += dx * dx;
      ay += dy * dy;
    }
  }
  return (ax + ay) / static_cast<S>(ne);
}

template <typename S>
void offset_loss_grad(const PredictionGrid<S>& pred, const GroundTruthGrid& gt,
                      std::array<Plane<S>, 2>& g_off, S scale) {
  detail::check_grid(pred, gt);
  const int ne = gt.n_exist();
  if (ne == 0) return;
  const S k = scale * S(2) / static_cast<S>(ne);
  for (Eigen::Index r = 0; r < gt.exist.rows(); ++r) {
    for (Eigen::Index c = 0; c < gt.exist.cols(); ++c) {
      if (!gt.exist(r, c)) continue;
      g_off[0](r, c) += -k * (static_cast<S>(gt.offset_x(r, c)) - pred.offset[0](r, c));
      g_off[1](r, c) += -k * (static_cast<S>(gt.offset_y(r, c)) - pred.offset[1](r, c));
    }
  }
}

// ---------------------------------------------------------------------------
// Embedding feature loss: pull same-instance cells together, push different
// instances at least K apart. Sum over ordered pairs (self pairs contribute
// zero) normalized by N_e^2.
// ---------------------------------------------------------------------------

namespace detail {

template <typename S>
struct ExistCell {
  int instance;
  Eigen::Index r, c;
  Eigen::Matrix<S, kEmbeddingDim, 1> f;
};

template <typename S>
std::vector<ExistCell<S>> exist_cells(const PredictionGrid<S>& pred, const GroundTruthGrid& gt) {
  std::vector<ExistCell<S>> cells;
  for (Eigen::Index r = 0; r < gt.exist.rows(); ++r) {
    for (Eigen::Index c = 0; c < gt.exist.cols(); ++c) {
      if (!gt.exist(r, c)) continue;
      ExistCell<S> cell;
      cell.instance = gt.instance(r, c);
      cell.r = r;
      cell.c = c;
      for (int d = 0; d < kEmbeddingDim; ++d) cell.f[d] = pred.embedding[d](r, c);
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace detail

template <typename S>
S feature_loss(const PredictionGrid<S>& pred, const GroundTruthGrid& gt, S margin) {
  detail::check_grid(pred, gt);
  const auto cells = detail::exist_cells(pred, gt);
  const std::size_t ne = cells.size();
  if (ne == 0) return S(0);
  S acc = 0;
  for (std::size_t i = 0; i < ne; ++i) {
    for (std::size_t j = i + 1; j < ne; ++j) {
      const S d = (cells[i].f - cells[j].f).norm();
      const S l = (cells[i].instance == cells[j].instance) ? d : std::max(S(0), margin - d);
      acc += S(2) * l;  // ordered pairs (i,j) and (j,i)
    }
  }
  return acc / (static_cast<S>(ne) * static_cast<S>(ne));
}

template <typename S>
void feature_loss_grad(const PredictionGrid<S>& pred, const GroundTruthGrid& gt, S margin,
                       std::array<Plane<S>, kEmbeddingDim>& g_emb, S scale) {
  detail::check_grid(pred, gt);
  const auto cells = detail::exist_cells(pred, gt);
  const std::size_t ne = cells.size();
  if (ne == 0) return;
  const S norm = scale * S(2) / (static_cast<S>(ne) * static_cast<S>(ne));
  for (std::size_t i = 0; i < ne; ++i) {
    for (std::size_t j = i + 1; j < ne; ++j) {
      const Eigen::Matrix<S, kEmbeddingDim, 1> diff = cells[i].f - cells[j].f;
      const S d = diff.norm();
      if (d == S(0)) continue;  // subgradient 0 at the pull kink
      S coef;
      if (cells[i].instance == cells[j].instance) {
        coef = norm / d;
      } else if (d < margin) {
        coef = -norm / d;
      } else {
        continue;
      }
      for (int k = 0; k < kEmbeddingDim; ++k) {
        g_emb[k](cells[i].r, cells[i].c) += coef * diff[k];
        g_emb[k](cells[j].r, cells[j].c) -= coef * diff[k];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Distillation loss: spatial-softmaxed channel-energy maps of every module are
// pulled toward the deepest module's map.
// ---------------------------------------------------------------------------

// G: channel-wise squared magnitude, flattened over the bottom grid.
template <typename S>
Eigen::RowVectorX<S> spatial_attention(const AttnMat<S>& a) {
  return a.array().square().colwise().sum().matrix();
}

template <typename S>
Eigen::RowVectorX<S> spatial_softmax(const Eigen::RowVectorX<S>& g) {
  const S m = g.maxCoeff();
  Eigen::RowVectorX<S> e = (g.array() - m).exp().matrix();
  return e / e.sum();
}

template <typename S>
S attention_sq_distance(const Eigen::RowVectorX<S>& a, const Eigen::RowVectorX<S>& b) {
  return (a - b).squaredNorm();
}

// Softmaxed attention map of one module's distillation activation.
template <typename S>
Eigen::RowVectorX<S> attention_map(const AttnMat<S>& a) {
  return spatial_softmax<S>(spatial_attention<S>(a));
}

template <typename S>
S distillation_loss(const std::vector<AttnMat<S>>& activations) {
  const int m_count = static_cast<int>(activations.size());
  if (m_count < 2) return S(0);
  std::vector<Eigen::RowVectorX<S>> maps(m_count);
  for (int m = 0; m < m_count; ++m) maps[m] = attention_map<S>(activations[m]);
  S acc = 0;
  for (int m = 0; m < m_count - 1; ++m) {
    acc += attention_sq_distance<S>(maps[m_count - 1], maps[m]);
  }
  return acc;
}

// Accumulates scale * dL/dA_m into grads[m]. With stop_teacher the deepest
// module's map is treated as a constant target.
template <typename S>
S distillation_loss_grad(const std::vector<AttnMat<S>>& activations,
                         std::vector<AttnMat<S>>& grads, S scale, bool stop_teacher) {
  const int m_count = static_cast<int>(activations.size());
  if (m_count < 2) return S(0);
  std::vector<Eigen::RowVectorX<S>> maps(m_count);
  for (int m = 0; m < m_count; ++m) maps[m] = attention_map<S>(activations[m]);

  std::vector<Eigen::RowVectorX<S>> g_map(m_count);
  for (int m = 0; m < m_count; ++m) g_map[m] = Eigen::RowVectorX<S>::Zero(maps[m].size());

  S acc = 0;
  const auto& teacher = maps[m_count - 1];
  for (int m = 0; m < m_count - 1; ++m) {
    const Eigen::RowVectorX<S> diff = teacher - maps[m];
    acc += diff.squaredNorm();
    g_map[m] += -S(2) * diff;
    if (!stop_teacher) g_map[m_count - 1] += S(2) * diff;
  }

  for (int m = 0; m < m_count; ++m) {
    if (stop_teacher && m == m_count - 1) continue;
    // through the softmax: dL/dg_i = s_i (dL/ds_i - sum_j dL/ds_j s_j)
    const S dot = g_map[m].dot(maps[m]);
    Eigen::RowVectorX<S> g_energy =
        (maps[m].array() * (g_map[m].array() - dot)).matrix();
    // through the channel energy: dg_i/dA(c,i) = 2 A(c,i)
    for (Eigen::Index c = 0; c < activations[m].rows(); ++c) {
      grads[m].row(c).array() +=
          scale * S(2) * activations[m].row(c).array() * g_energy.array();
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Weighted total over all active modules
// ---------------------------------------------------------------------------

template <typename S>
Breakdown<S> total_loss(const ModuleOutputs<S>& out, const GroundTruthGrid& gt,
                        const HyperParams& hp) {
  if (out.grids.empty()) throw Error("total_loss: no module outputs");
  Breakdown<S> b;
  for (const auto& grid : out.grids) {
    b.exist += exist_loss(grid, gt);
    b.non_exist += non_exist_loss(grid, gt);
    b.offset += offset_loss(grid, gt);
    b.feature += feature_loss(grid, gt, static_cast<S>(hp.margin));
  }
  b.distillation = distillation_loss(out.activations);
  b.total = static_cast<S>(hp.gamma_e) * b.exist + static_cast<S>(hp.gamma_n) * b.non_exist +
            static_cast<S>(hp.gamma_o) * b.offset + static_cast<S>(hp.gamma_f) * b.feature +
            static_cast<S>(hp.gamma_d) * b.distillation;
  return b;
}

// Gradient form: accumulates scale * d(total)/d(outputs) into grid_grads (one
// PredictionGrid-shaped bundle per module) and attn_grads.
template <typename S>
Breakdown<S> total_loss_grad(const ModuleOutputs<S>& out, const GroundTruthGrid& gt,
                             const HyperParams& hp, std::vector<PredictionGrid<S>>& grid_grads,
                             std::vector<AttnMat<S>>& attn_grads, S scale,
                             bool stop_teacher = true) {
  if (out.grids.empty()) throw Error("total_loss: no module outputs");
  Breakdown<S> b;
  for (std::size_t m = 0; m < out.grids.size(); ++m) {
    const auto& grid = out.grids[m];
    auto& g = grid_grads[m];
    b.exist += exist_loss(grid, gt);
    exist_loss_grad(grid, gt, g.confidence, scale * static_cast<S>(hp.gamma_e));
    b.non_exist += non_exist_loss(grid, gt);
    non_exist_loss_grad(grid, gt, g.confidence, scale * static_cast<S>(hp.gamma_n));
    b.offset += offset_loss(grid, gt);
    offset_loss_grad(grid, gt, g.offset, scale * static_cast<S>(hp.gamma_o));
    b.feature += feature_loss(grid, gt, static_cast<S>(hp.margin));
    feature_loss_grad(grid, gt, static_cast<S>(hp.margin), g.embedding,
                      scale * static_cast<S>(hp.gamma_f));
  }
  b.distillation = distillation_loss_grad(out.activations, attn_grads,
                                          scale * static_cast<S>(hp.gamma_d), stop_teacher);
  b.total = static_cast<S>(hp.gamma_e) * b.exist + static_cast<S>(hp.gamma_n) * b.non_exist +
            static_cast<S>(hp.gamma_o) * b.offset + static_cast<S>(hp.gamma_f) * b.feature +
            static_cast<S>(hp.gamma_d) * b.distillation;
  return b;
}

}  // namespace keylane::loss
