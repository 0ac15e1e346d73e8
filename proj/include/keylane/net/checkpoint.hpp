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

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "keylane/net/adam.hpp"
#include "keylane/net/model.hpp"

namespace keylane::net {

// Self-describing archive of named float32 tensors plus the model spec:
//   "KLCK0001" | u64 header bytes | header JSON | raw little-endian payload.
// Clipping rewrites the archive alone, no training code required.
struct Checkpoint {
  ModelSpec spec;
  std::vector<std::pair<std::string, Vec<float>>> tensors;
  nlohmann::json extra;

  const Vec<float>* find(const std::string& name) const {
    for (const auto& [n, v] : tensors) {
      if (n == name) return &v;
    }
    return nullptr;
  }
};

inline constexpr char kCheckpointMagic[8] = {'K', 'L', 'C', 'K', '0', '0', '0', '1'};

inline nlohmann::json spec_to_json(const ModelSpec& s) {
  return {{"n_hourglass", s.n_hourglass},
          {"feature_channels", s.feature_channels},
          {"bottleneck_mid", s.bottleneck_mid},
          {"conf_channels", s.conf_channels},
          {"offset_channels", s.offset_channels},
          {"embedding_channels", s.embedding_channels}};
}

inline ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.n_hourglass = j.at("n_hourglass").get<int>();
  s.feature_channels = j.at("feature_channels").get<int>();
  s.bottleneck_mid = j.at("bottleneck_mid").get<int>();
  s.conf_channels = j.at("conf_channels").get<int>();
  s.offset_channels = j.at("offset_channels").get<int>();
  s.embedding_channels = j.at("embedding_channels").get<int>();
  return s;
}

inline void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["spec"] = spec_to_json(ckpt.spec);
  header["extra"] = ckpt.extra;
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, v] : ckpt.tensors) {
    tensors.push_back({{"name", name}, {"size", v.size()}, {"offset", offset}});
    offset += static_cast<std::size_t>(v.size()) * sizeof(float);
  }
  header["tensors"] = tensors;
  const std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint64_t hlen = hs.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& [name, v] : ckpt.tensors) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(float)));
  }
  if (!out) throw IoError("short write on checkpoint: " + path);
}

inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw ParseError("not a checkpoint file: " + path);
  }
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw ParseError("truncated checkpoint header: " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hs);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("bad checkpoint header: ") + e.what());
  }

  Checkpoint ckpt;
  ckpt.spec = spec_from_json(header.at("spec"));
  ckpt.extra = header.value("extra", nlohmann::json::object());
  for (const auto& t : header.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const Eigen::Index size = t.at("size").get<Eigen::Index>();
    Vec<float> v(size);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(size * sizeof(float)));
    if (!in) throw ParseError("truncated checkpoint payload: " + path);
    ckpt.tensors.emplace_back(name, std::move(v));
  }
  return ckpt;
}

inline Checkpoint checkpoint_from_model(Model<float>& model,
                                        const nlohmann::json& extra = nlohmann::json::object(),
                                        const Adam<float>* optimizer = nullptr) {
  Checkpoint ckpt;
  ckpt.spec = model.spec;
  ckpt.extra = extra;
  std::vector<ParamRef<float>> ps;
  std::vector<BufferRef<float>> bs;
  model.collect(ps, bs);
  for (const auto& p : ps) ckpt.tensors.emplace_back(p.name, *p.value);
  for (const auto& b : bs) ckpt.tensors.emplace_back(b.name, *b.value);
  if (optimizer) {
    ckpt.extra["adam_t"] = optimizer->t;
    for (const auto& [name, mv] : optimizer->moments) {
      ckpt.tensors.emplace_back("adam.m." + name, mv.first);
      ckpt.tensors.emplace_back("adam.v." + name, mv.second);
    }
  }
  return ckpt;
}

inline void save_checkpoint(const std::string& path, Model<float>& model,
                            const nlohmann::json& extra = nlohmann::json::object(),
                            const Adam<float>* optimizer = nullptr) {
  write_checkpoint(path, checkpoint_from_model(model, extra, optimizer));
}

// Rebuilds the model (and optionally the optimizer moments) from an archive.
inline Model<float> model_from_checkpoint(const Checkpoint& ckpt, Adam<float>* optimizer = nullptr) {
  Model<float> model;
  model.build(ckpt.spec);
  std::vector<ParamRef<float>> ps;
  std::vector<BufferRef<float>> bs;
  model.collect(ps, bs);
  for (const auto& p : ps) {
    const Vec<float>* v = ckpt.find(p.name);
    if (!v) throw ParseError("checkpoint missing tensor '" + p.name + "'");
    if (v->size() != p.value->size()) {
      throw ParseError("checkpoint tensor '" + p.name + "' has wrong size");
    }
    *p.value = *v;
  }
  for (const auto& b : bs) {
    const Vec<float>* v = ckpt.find(b.name);
    if (!v) throw ParseError("checkpoint missing tensor '" + b.name + "'");
    if (v->size() != b.value->size()) {
      throw ParseError("checkpoint tensor '" + b.name + "' has wrong size");
    }
    *b.value = *v;
  }
  if (optimizer) {
    optimizer->t = ckpt.extra.value("adam_t", 0L);
    optimizer->moments.clear();
    for (const auto& p : ps) {
      const Vec<float>* m = ckpt.find("adam.m." + p.name);
      const Vec<float>* v = ckpt.find("adam.v." + p.name);
      if (m && v) optimizer->moments[p.name] = {*m, *v};
    }
  }
  return model;
}

inline Model<float> load_checkpoint(const std::string& path, nlohmann::json* extra_out = nullptr,
                                    Adam<float>* optimizer = nullptr) {
  const Checkpoint ckpt = read_checkpoint(path);
  if (extra_out) *extra_out = ckpt.extra;
  return model_from_checkpoint(ckpt, optimizer);
}

// Archive-level truncation: keeps the resizing front-end plus the first n
// modules, drops optimizer state, and rewrites the spec. Kept tensor payloads
// are copied byte for byte.
inline void clip_checkpoint(const std::string& in_path, int n, const std::string& out_path) {
  Checkpoint ckpt = read_checkpoint(in_path);
  if (n < 1 || n > ckpt.spec.n_hourglass) {
    throw BoundsError("clip: n " + std::to_string(n) + " outside [1, " +
                      std::to_string(ckpt.spec.n_hourglass) + "]");
  }
  Checkpoint out;
  out.spec = ckpt.spec;
  out.spec.n_hourglass = n;
  out.extra = ckpt.extra;
  out.extra.erase("adam_t");
  for (auto& [name, v] : ckpt.tensors) {
    if (name.rfind("adam.", 0) == 0) continue;
    if (name.rfind("hg", 0) == 0) {
      const std::size_t dot = name.find('.');
      const int idx = std::stoi(name.substr(2, dot - 2));
      if (idx >= n) continue;
    }
    out.tensors.emplace_back(name, std::move(v));
  }
  write_checkpoint(out_path, out);
}

}  // namespace keylane::net
