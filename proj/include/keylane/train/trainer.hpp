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
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "keylane/data/dataset.hpp"
#include "keylane/loss/losses.hpp"
#include "keylane/metrics/tusimple_metric.hpp"
#include "keylane/net/adam.hpp"
#include "keylane/net/model.hpp"
#include "keylane/train/config.hpp"

namespace keylane::train {

// Raised when a step produces a non-finite loss; a diagnostic snapshot of the
// offending batch is written to <out_dir>/abort_snapshot.json first.
class TrainAbort : public Error {
 public:
  using Error::Error;
};

struct EpochRecord {
  int epoch = 0;
  long global_step = 0;  // cumulative optimizer steps at the end of the epoch
  loss::Breakdown<double> losses;  // batch means over the epoch
  double lr = 0.0;
  double gamma_e = 0.0;
  bool evaluated = false;
  std::map<int, metrics::EvalReport> val;  // per clip depth
  std::map<int, double> attn_gap;          // mean attention distance vs deepest module

  nlohmann::json to_json() const;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int epochs_run = 0;
  bool stopped_early = false;
};

// Returning false stops training after the current epoch.
using EpochCallback = std::function<bool(const EpochRecord&, net::Model<float>&)>;

// Builds the sample pool a config describes (generates synthetic frames or
// loads a dataset from disk).
std::vector<data::Sample> build_pool(const TrainConfig& cfg);

// Per-image slices of a batched forward pass, for the loss functions.
loss::ModuleOutputs<float> slice_outputs(const net::Model<float>::Outputs& out, int sample);

// Converts samples/detections into x-at-fixed-y frames (source coordinates)
// for scoring.
metrics::XYSampledFrame frame_from_lanes(std::span<const LaneInstance> lanes,
                                         const std::string& id);

// Runs detection at every requested clip depth from a single full-depth
// forward pass and scores each depth against the samples' labels.
std::map<int, metrics::EvalReport> evaluate_clips(net::Model<float>& model,
                                                  std::span<const data::Sample> samples,
                                                  const TrainConfig& cfg,
                                                  std::map<int, double>* attn_gap = nullptr);

// End-to-end loop: hard-mined batches, augmentation, label encoding, forward,
// weighted losses over every module, Adam steps, periodic evaluation at every
// clip depth, checkpointing and a JSONL history stream. Deterministic for a
// fixed seed. start_epoch > 0 resumes counting from a restored checkpoint.
TrainResult train(const TrainConfig& cfg, std::vector<data::Sample>& pool,
                  net::Model<float>& model, net::Adam<float>& optimizer,
                  const EpochCallback& callback = {}, int start_epoch = 0);

}  // namespace keylane::train
