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
#include <vector>

#include "keylane/core/types.hpp"

namespace keylane::train {

// Human-editable key=value training configuration. Unknown keys and malformed
// values raise ConfigError naming the field.
struct TrainConfig {
  // run
  int epochs = 100;
  int batch_size = 6;
  std::uint64_t seed = 1;
  std::string out_dir = "run";
  int checkpoint_every = 25;  // epochs; 0 = only final
  int eval_every = 5;         // epochs; 0 = never
  bool eval_on_train = false;
  int val_count = 8;          // held-out tail of the pool when eval_on_train is off
  double stop_accuracy = 0.0; // early stop once reached together with stop_fp (0 = off)
  double stop_fp = 1.0;

  // optimizer
  double lr = 1e-4;
  double grad_clip = 0.0;     // global norm cap; 0 = off
  int plateau_patience = 0;   // evals without improvement before halving lr; 0 = off
  double min_lr = 1e-6;

  // loss weights & schedule
  double gamma_e = 1.0, gamma_n = 1.0, gamma_o = 0.2, gamma_f = 0.5, gamma_d = 0.1;
  double gamma_e_boost = 2.5;
  int gamma_e_boost_epoch = -1;  // -1 disables the switch
  double margin = 1.0;
  bool stop_teacher = true;

  // model
  int n_hourglass = 4;
  int feature_channels = 128;
  int bottleneck_mid = 32;

  // decoding for evaluation, indexed by module count 1..N
  std::vector<double> conf_thresholds = {0.52, 0.30, 0.32, 0.35};
  double cluster_distance = 0.08;
  int min_cluster_size = 3;
  double smooth_factor = 0.5;

  // data
  std::string dataset_kind = "synthetic";  // synthetic | xy | polyline
  std::string dataset_path;
  std::string image_root;
  int synth_count = 32;
  int synth_lane_min = 2, synth_lane_max = 3;
  double synth_curvature = 0.0015;
  double synth_noise = 0.0;
  double synth_occlusion = 0.0;

  // augmentation & hard mining
  std::string augment_ops;     // comma list; empty = none
  double augment_prob = 0.5;   // per-op inclusion probability per sample
  double hard_fraction = 0.3;

  double conf_threshold_for(int n_active) const;
  HyperParams hyper(int epoch) const;
  void validate() const;
};

TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::string& path);

}  // namespace keylane::train
