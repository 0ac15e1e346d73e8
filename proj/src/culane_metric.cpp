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
#include "keylane/metrics/culane_metric.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

namespace keylane::metrics {

namespace {

double point_segment_distance(double px, double py, double x1, double y1, double x2, double y2) {
  const double dx = x2 - x1, dy = y2 - y1;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((px - x1) * dx + (py - y1) * dy) / len2, 0.0, 1.0);
  const double cx = x1 + t * dx, cy = y1 + t * dy;
  return std::hypot(px - cx, py - cy);
}

constexpr int kMaxExactLanes = 16;

}  // namespace

std::vector<std::uint64_t> rasterize_lane(const std::vector<std::pair<double, double>>& pts,
                                          const IoUScoreOptions& opt) {
  const std::size_t words = (static_cast<std::size_t>(opt.width) * opt.height + 63) / 64;
  std::vector<std::uint64_t> mask(words, 0);
  const double r = opt.stroke_width / 2.0;
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const auto [x1, y1] = pts[s];
    const auto [x2, y2] = pts[s + 1];
    const int x_lo = std::max(0, static_cast<int>(std::floor(std::min(x1, x2) - r - 1.0)));
    const int x_hi = std::min(opt.width - 1, static_cast<int>(std::ceil(std::max(x1, x2) + r + 1.0)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(std::min(y1, y2) - r - 1.0)));
    const int y_hi = std::min(opt.height - 1, static_cast<int>(std::ceil(std::max(y1, y2) + r + 1.0)));
    for (int y = y_lo; y <= y_hi; ++y) {
      for (int x = x_lo; x <= x_hi; ++x) {
        if (point_segment_distance(x + 0.5, y + 0.5, x1, y1, x2, y2) <= r) {
          const std::size_t idx = static_cast<std::size_t>(y) * opt.width + x;
          mask[idx >> 6] |= (1ULL << (idx & 63));
        }
      }
    }
  }
  return mask;
}

double mask_iou(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  if (a.size() != b.size()) throw ShapeError("mask_iou: mask sizes differ");
  long inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += std::popcount(a[i] & b[i]);
    uni += std::popcount(a[i] | b[i]);
  }
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

std::vector<int> optimal_assignment(const std::vector<std::vector<double>>& iou) {
  const int np = static_cast<int>(iou.size());
  const int ng = np > 0 ? static_cast<int>(iou[0].size()) : 0;
  std::vector<int> result(np, -1);
  if (np == 0 || ng == 0) return result;
  if (ng > kMaxExactLanes || np > kMaxExactLanes) {
    throw Error("optimal_assignment: too many lanes for exact matching");
  }

  // DP over prediction index and the subset of ground-truth lanes in use.
  const int n_masks = 1 << ng;
  const double kNegInf = -1.0;
  std::vector<std::vector<double>> best(np + 1, std::vector<double>(n_masks, kNegInf));
  std::vector<std::vector<int>> choice(np + 1, std::vector<int>(n_masks, -2));
  best[0][0] = 0.0;
  for (int p = 0; p < np; ++p) {
    for (int mask = 0; mask < n_masks; ++mask) {
      if (best[p][mask] < 0.0) continue;
      if (best[p][mask] > best[p + 1][mask]) {  // leave prediction p unmatched
        best[p + 1][mask] = best[p][mask];
        choice[p + 1][mask] = -1;
      }
      for (int g = 0; g < ng; ++g) {
        if (mask & (1 << g)) continue;
        const int next = mask | (1 << g);
        const double v = best[p][mask] + iou[p][g];
        if (v > best[p + 1][next]) {
          best[p + 1][next] = v;
          choice[p + 1][next] = g;
        }
      }
    }
  }
  int arg = 0;
  for (int mask = 1; mask < n_masks; ++mask) {
    if (best[np][mask] > best[np][arg]) arg = mask;
  }
  for (int p = np; p > 0; --p) {
    const int g = choice[p][arg];
    if (g >= 0) {
      result[p - 1] = g;
      arg &= ~(1 << g);
    }
  }
  return result;
}

EvalReport culane_score(const std::vector<PolylineFrame>& preds,
                        const std::vector<PolylineFrame>& gts, const IoUScoreOptions& opt) {
  std::map<std::string, const PolylineFrame*> pred_by_id;
  for (const auto& f : preds) pred_by_id[f.id] = &f;
  if (pred_by_id.size() != preds.size()) throw Error("culane_score: duplicate prediction ids");

  EvalReport report;
  for (const auto& gt : gts) {
    auto it = pred_by_id.find(gt.id);
    if (it == pred_by_id.end()) throw Error("culane_score: no prediction for frame '" + gt.id + "'");
    const PolylineFrame& pred = *it->second;
    report.frames += 1;

    auto rasterize_all = [&](const PolylineFrame& f) {
      std::vector<std::vector<std::uint64_t>> masks;
      for (const auto& lane : f.lanes) {
        if (lane.size() < 2) {
          report.skipped_lanes += 1;
          continue;
        }
        masks.push_back(rasterize_lane(lane, opt));
      }
      return masks;
    };
    const auto pred_masks = rasterize_all(pred);
    const auto gt_masks = rasterize_all(gt);

    std::vector<std::vector<double>> iou(pred_masks.size(),
                                         std::vector<double>(gt_masks.size(), 0.0));
    for (std::size_t p = 0; p < pred_masks.size(); ++p) {
      for (std::size_t g = 0; g < gt_masks.size(); ++g) {
        iou[p][g] = mask_iou(pred_masks[p], gt_masks[g]);
      }
    }
    const auto match = optimal_assignment(iou);

    long tp = 0;
    for (std::size_t p = 0; p < pred_masks.size(); ++p) {
      if (match[p] >= 0 && iou[p][static_cast<std::size_t>(match[p])] > opt.iou_threshold) ++tp;
    }
    CategoryScore& cat = report.categories[gt.category];
    cat.tp += tp;
    cat.fp += static_cast<long>(pred_masks.size()) - tp;
    cat.fn += static_cast<long>(gt_masks.size()) - tp;
  }

  for (auto& [name, cat] : report.categories) {
    (void)name;
    report.overall.tp += cat.tp;
    report.overall.fp += cat.fp;
    report.overall.fn += cat.fn;
    cat.finalize();
  }
  report.overall.finalize();
  return report;
}

}  // namespace keylane::metrics
