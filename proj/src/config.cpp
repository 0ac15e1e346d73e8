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
#include "keylane/train/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace keylane::train {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw ConfigError("config field '" + key + "': expected integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw ConfigError("config field '" + key + "': expected number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config field '" + key + "': expected boolean, got '" + v + "'");
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw ConfigError("config field '" + key + "': expected unsigned integer, got '" + v + "'");
  }
}

std::vector<double> to_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::istringstream in(v);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(to_double(key, tok));
  }
  if (out.empty()) throw ConfigError("config field '" + key + "': empty list");
  return out;
}

}  // namespace

double TrainConfig::conf_threshold_for(int n_active) const {
  if (n_active < 1) throw ConfigError("conf_threshold_for: n_active must be >= 1");
  const std::size_t idx = std::min<std::size_t>(n_active, conf_thresholds.size()) - 1;
  return conf_thresholds[idx];
}

HyperParams TrainConfig::hyper(int epoch) const {
  HyperParams hp;
  hp.gamma_e = (gamma_e_boost_epoch >= 0 && epoch >= gamma_e_boost_epoch) ? gamma_e_boost : gamma_e;
  hp.gamma_n = gamma_n;
  hp.gamma_o = gamma_o;
  hp.gamma_f = gamma_f;
  hp.gamma_d = gamma_d;
  hp.margin = margin;
  hp.conf_threshold = conf_threshold_for(n_hourglass);
  hp.cluster_distance = cluster_distance;
  return hp;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("config field 'epochs': must be >= 1");
  if (batch_size < 1) throw ConfigError("config field 'batch_size': must be >= 1");
  if (lr <= 0) throw ConfigError("config field 'lr': must be > 0");
  if (hard_fraction < 0 || hard_fraction > 1) {
    throw ConfigError("config field 'hard_fraction': must lie in [0,1]");
  }
  if (augment_prob < 0 || augment_prob > 1) {
    throw ConfigError("config field 'augment_prob': must lie in [0,1]");
  }
  for (double t : conf_thresholds) {
    if (!(t > 0.0 && t < 1.0)) {
      throw ConfigError("config field 'conf_thresholds': entries must lie in (0,1)");
    }
  }
  if (dataset_kind != "synthetic" && dataset_kind != "xy" && dataset_kind != "polyline") {
    throw ConfigError("config field 'dataset_kind': must be synthetic, xy or polyline");
  }
  if (dataset_kind != "synthetic" && dataset_path.empty()) {
    throw ConfigError("config field 'dataset_path': required for dataset_kind=" + dataset_kind);
  }
  hyper(0).validate();
  if (out_dir.empty()) throw ConfigError("config field 'out_dir': must not be empty");
}

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"epochs", [&](auto k, auto v) { c.epochs = to_int(k, v); }},
      {"batch_size", [&](auto k, auto v) { c.batch_size = to_int(k, v); }},
      {"seed", [&](auto k, auto v) { c.seed = to_u64(k, v); }},
      {"out_dir", [&](auto, auto v) { c.out_dir = v; }},
      {"checkpoint_every", [&](auto k, auto v) { c.checkpoint_every = to_int(k, v); }},
      {"eval_every", [&](auto k, auto v) { c.eval_every = to_int(k, v); }},
      {"eval_on_train", [&](auto k, auto v) { c.eval_on_train = to_bool(k, v); }},
      {"val_count", [&](auto k, auto v) { c.val_count = to_int(k, v); }},
      {"stop_accuracy", [&](auto k, auto v) { c.stop_accuracy = to_double(k, v); }},
      {"stop_fp", [&](auto k, auto v) { c.stop_fp = to_double(k, v); }},
      {"lr", [&](auto k, auto v) { c.lr = to_double(k, v); }},
      {"grad_clip", [&](auto k, auto v) { c.grad_clip = to_double(k, v); }},
      {"plateau_patience", [&](auto k, auto v) { c.plateau_patience = to_int(k, v); }},
      {"min_lr", [&](auto k, auto v) { c.min_lr = to_double(k, v); }},
      {"gamma_e", [&](auto k, auto v) { c.gamma_e = to_double(k, v); }},
      {"gamma_n", [&](auto k, auto v) { c.gamma_n = to_double(k, v); }},
      {"gamma_o", [&](auto k, auto v) { c.gamma_o = to_double(k, v); }},
      {"gamma_f", [&](auto k, auto v) { c.gamma_f = to_double(k, v); }},
      {"gamma_d", [&](auto k, auto v) { c.gamma_d = to_double(k, v); }},
      {"gamma_e_boost", [&](auto k, auto v) { c.gamma_e_boost = to_double(k, v); }},
      {"gamma_e_boost_epoch", [&](auto k, auto v) { c.gamma_e_boost_epoch = to_int(k, v); }},
      {"margin", [&](auto k, auto v) { c.margin = to_double(k, v); }},
      {"stop_teacher", [&](auto k, auto v) { c.stop_teacher = to_bool(k, v); }},
      {"n_hourglass", [&](auto k, auto v) { c.n_hourglass = to_int(k, v); }},
      {"feature_channels", [&](auto k, auto v) { c.feature_channels = to_int(k, v); }},
      {"bottleneck_mid", [&](auto k, auto v) { c.bottleneck_mid = to_int(k, v); }},
      {"conf_thresholds", [&](auto k, auto v) { c.conf_thresholds = to_double_list(k, v); }},
      {"cluster_distance", [&](auto k, auto v) { c.cluster_distance = to_double(k, v); }},
      {"min_cluster_size", [&](auto k, auto v) { c.min_cluster_size = to_int(k, v); }},
      {"smooth_factor", [&](auto k, auto v) { c.smooth_factor = to_double(k, v); }},
      {"dataset_kind", [&](auto, auto v) { c.dataset_kind = v; }},
      {"dataset_path", [&](auto, auto v) { c.dataset_path = v; }},
      {"image_root", [&](auto, auto v) { c.image_root = v; }},
      {"synth_count", [&](auto k, auto v) { c.synth_count = to_int(k, v); }},
      {"synth_lane_min", [&](auto k, auto v) { c.synth_lane_min = to_int(k, v); }},
      {"synth_lane_max", [&](auto k, auto v) { c.synth_lane_max = to_int(k, v); }},
      {"synth_curvature", [&](auto k, auto v) { c.synth_curvature = to_double(k, v); }},
      {"synth_noise", [&](auto k, auto v) { c.synth_noise = to_double(k, v); }},
      {"synth_occlusion", [&](auto k, auto v) { c.synth_occlusion = to_double(k, v); }},
      {"augment_ops", [&](auto, auto v) { c.augment_ops = v; }},
      {"augment_prob", [&](auto k, auto v) { c.augment_prob = to_double(k, v); }},
      {"hard_fraction", [&](auto k, auto v) { c.hard_fraction = to_double(k, v); }},
  };

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown field '" + key + "'");
    }
    it->second(key, value);
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_train_config(buf.str());
}

}  // namespace keylane::train
