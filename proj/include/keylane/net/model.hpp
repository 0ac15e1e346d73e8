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

#include <array>
#include <string>
#include <vector>

#include "keylane/core/types.hpp"
#include "keylane/net/layers.hpp"

namespace keylane::net {

// Declarative shape of the predictor: a resizing front-end (three stride-2
// convs, widths f/4, f/2, f) followed by n_hourglass identical encoder-decoder
// modules with confidence/offset/embedding branches. Clipping keeps the
// front-end plus the first n modules.
struct ModelSpec {
  int n_hourglass = 4;
  int feature_channels = 128;
  int bottleneck_mid = 32;
  int conf_channels = 1;
  int offset_channels = 2;
  int embedding_channels = kEmbeddingDim;

  void validate() const {
    if (n_hourglass < 1) throw ConfigError("n_hourglass must be >= 1");
    if (feature_channels < 8 || feature_channels % 4 != 0) {
      throw ConfigError("feature_channels must be a positive multiple of 4 (>= 8)");
    }
    if (bottleneck_mid < 1) throw ConfigError("bottleneck_mid must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Conv + PReLU + BN unit (the repeated cell of the layer tables)
// ---------------------------------------------------------------------------

template <typename S>
struct ConvBNAct {
  Conv2d<S> conv;
  PReLU<S> act;
  BatchNorm2d<S> bn;

  struct State {
    Tensor4<S> yconv, yact;
    typename BatchNorm2d<S>::Cache bn_cache;
  };

  void configure(int in_c, int out_c, int k, int stride, int pad) {
    conv.configure(in_c, out_c, k, stride, pad);
    act.configure(out_c);
    bn.configure(out_c);
  }
  void init(Rng& rng) { conv.init(rng); }

  void forward(const Tensor4<S>& x, Tensor4<S>& y, State& st, bool train) {
    conv.forward(x, st.yconv);
    act.forward(st.yconv, st.yact);
    if (train) {
      bn.train_forward(st.yact, y, st.bn_cache);
    } else {
      bn.infer(st.yact, y);
    }
  }

  void backward(const Tensor4<S>& x, State& st, const Tensor4<S>& gy, Tensor4<S>* gx) {
    Tensor4<S> g_act(st.yact.n, st.yact.c, st.yact.h, st.yact.w);
    bn.backward(st.bn_cache, gy, &g_act);
    Tensor4<S> g_conv(st.yconv.n, st.yconv.c, st.yconv.h, st.yconv.w);
    act.backward(st.yconv, g_act, &g_conv);
    conv.backward(x, g_conv, gx);
  }

  void collect(const std::string& p, std::vector<ParamRef<S>>& params,
               std::vector<BufferRef<S>>& buffers) {
    conv.collect(p + ".conv", params);
    act.collect(p + ".act", params);
    bn.collect(p + ".bn", params, buffers);
  }
};

// Transposed-conv variant, used as the first layer of up bottlenecks.
template <typename S>
struct ConvTBNAct {
  ConvTranspose2d<S> conv;
  PReLU<S> act;
  BatchNorm2d<S> bn;

  struct State {
    Tensor4<S> yconv, yact;
    typename BatchNorm2d<S>::Cache bn_cache;
  };

  void configure(int in_c, int out_c, int k, int stride, int pad, int out_pad) {
    conv.configure(in_c, out_c, k, stride, pad, out_pad);
    act.configure(out_c);
    bn.configure(out_c);
  }
  void init(Rng& rng) { conv.init(rng); }

  void forward(const Tensor4<S>& x, Tensor4<S>& y, State& st, bool train) {
    conv.forward(x, st.yconv);
    act.forward(st.yconv, st.yact);
    if (train) {
      bn.train_forward(st.yact, y, st.bn_cache);
    } else {
      bn.infer(st.yact, y);
    }
  }

  void backward(const Tensor4<S>& x, State& st, const Tensor4<S>& gy, Tensor4<S>* gx) {
    Tensor4<S> g_act(st.yact.n, st.yact.c, st.yact.h, st.yact.w);
    bn.backward(st.bn_cache, gy, &g_act);
    Tensor4<S> g_conv(st.yconv.n, st.yconv.c, st.yconv.h, st.yconv.w);
    act.backward(st.yconv, g_act, &g_conv);
    conv.backward(x, g_conv, gx);
  }

  void collect(const std::string& p, std::vector<ParamRef<S>>& params,
               std::vector<BufferRef<S>>& buffers) {
    conv.collect(p + ".conv", params);
    act.collect(p + ".act", params);
    bn.collect(p + ".bn", params, buffers);
  }
};

// ---------------------------------------------------------------------------
// Bottleneck: 1x1 (or 3x3-s2 / 3x3-s2-transposed) -> 3x3 -> 1x1, mid-width
// channels, plus a projection skip. Down halves the spatial size, Up doubles
// it (nearest-neighbor upsample on the skip path).
// ---------------------------------------------------------------------------

enum class BottleneckKind { kSame, kDown, kUp };

template <typename S>
struct Bottleneck {
  BottleneckKind kind = BottleneckKind::kSame;
  ConvBNAct<S> layer1;   // Same / Down first layer
  ConvTBNAct<S> up1;     // Up first layer
  ConvBNAct<S> layer2;   // 3x3 at mid width
  ConvBNAct<S> layer3;   // 1x1 back to out_c
  ConvBNAct<S> skip;     // 1x1 projection (stride 2 for Down)

  struct State {
    typename ConvBNAct<S>::State s1, s2, s3, ssk;
    typename ConvTBNAct<S>::State su1;
    Tensor4<S> t1, t2, t3, xup, tskip;
  };

  void configure(BottleneckKind kind_, int channels, int mid) {
    kind = kind_;
    switch (kind) {
      case BottleneckKind::kSame:
        layer1.configure(channels, mid, 1, 1, 0);
        skip.configure(channels, channels, 1, 1, 0);
        break;
      case BottleneckKind::kDown:
        layer1.configure(channels, mid, 3, 2, 1);
        skip.configure(channels, channels, 1, 2, 0);
        break;
      case BottleneckKind::kUp:
        up1.configure(channels, mid, 3, 2, 1, 1);
        skip.configure(channels, channels, 1, 1, 0);  // applied after 2x upsample
        break;
    }
    layer2.configure(mid, mid, 3, 1, 1);
    layer3.configure(mid, channels, 1, 1, 0);
  }

  void init(Rng& rng) {
    if (kind == BottleneckKind::kUp) {
      up1.init(rng);
    } else {
      layer1.init(rng);
    }
    layer2.init(rng);
    layer3.init(rng);
    skip.init(rng);
  }

  void forward(const Tensor4<S>& x, Tensor4<S>& y, State& st, bool train) {
    if (kind == BottleneckKind::kUp) {
      up1.forward(x, st.t1, st.su1, train);
      upsample2x_forward(x, st.xup);
      skip.forward(st.xup, st.tskip, st.ssk, train);
    } else {
      layer1.forward(x, st.t1, st.s1, train);
      skip.forward(x, st.tskip, st.ssk, train);
    }
    layer2.forward(st.t1, st.t2, st.s2, train);
    layer3.forward(st.t2, st.t3, st.s3, train);
    y = st.t3;
    y.data += st.tskip.data;
  }

  void backward(const Tensor4<S>& x, State& st, const Tensor4<S>& gy, Tensor4<S>* gx) {
    Tensor4<S> g2(st.t2.n, st.t2.c, st.t2.h, st.t2.w);
    layer3.backward(st.t2, st.s3, gy, &g2);
    Tensor4<S> g1(st.t1.n, st.t1.c, st.t1.h, st.t1.w);
    layer2.backward(st.t1, st.s2, g2, &g1);
    if (kind == BottleneckKind::kUp) {
      up1.backward(x, st.su1, g1, gx);
      Tensor4<S> gup(st.xup.n, st.xup.c, st.xup.h, st.xup.w);
      skip.backward(st.xup, st.ssk, gy, &gup);
      if (gx) upsample2x_backward(gup, *gx);
    } else {
      layer1.backward(x, st.s1, g1, gx);
      skip.backward(x, st.ssk, gy, gx);
    }
  }

  void collect(const std::string& p, std::vector<ParamRef<S>>& params,
               std::vector<BufferRef<S>>& buffers) {
    if (kind == BottleneckKind::kUp) {
      up1.collect(p + ".l1", params, buffers);
    } else {
      layer1.collect(p + ".l1", params, buffers);
    }
    layer2.collect(p + ".l2", params, buffers);
    layer3.collect(p + ".l3", params, buffers);
    skip.collect(p + ".skip", params, buffers);
  }
};

// ---------------------------------------------------------------------------
// Output branch: 3x3 -> 3x3 -> 1x1 over the grid.
// ---------------------------------------------------------------------------

template <typename S>
struct OutputBranch {
  ConvBNAct<S> cba1, cba2;
  Conv2d<S> out;

  struct State {
    typename ConvBNAct<S>::State s1, s2;
    Tensor4<S> t1, t2;
  };

  void configure(int in_c, int out_channels) {
    cba1.configure(in_c, in_c / 2, 3, 1, 1);
    cba2.configure(in_c / 2, in_c / 4, 3, 1, 1);
    out.configure(in_c / 4, out_channels, 1, 1, 0);
  }

  void init(Rng& rng, double out_bias = 0.0) {
    cba1.init(rng);
    cba2.init(rng);
    out.init(rng, out_bias);
  }

  void forward(const Tensor4<S>& x, Tensor4<S>& y, State& st, bool train) {
    cba1.forward(x, st.t1, st.s1, train);
    cba2.forward(st.t1, st.t2, st.s2, train);
    out.forward(st.t2, y);
  }

  void backward(const Tensor4<S>& x, State& st, const Tensor4<S>& gy, Tensor4<S>* gx) {
    Tensor4<S> g2(st.t2.n, st.t2.c, st.t2.h, st.t2.w);
    out.backward(st.t2, gy, &g2);
    Tensor4<S> g1(st.t1.n, st.t1.c, st.t1.h, st.t1.w);
    cba2.backward(st.t1, st.s2, g2, &g1);
    cba1.backward(x, st.s1, g1, gx);
  }

  void collect(const std::string& p, std::vector<ParamRef<S>>& params,
               std::vector<BufferRef<S>>& buffers) {
    cba1.collect(p + ".cba1", params, buffers);
    cba2.collect(p + ".cba2", params, buffers);
    out.collect(p + ".out", params);
  }
};

// Channel concatenation helpers (confidence forwarding).
template <typename S>
void concat_channels(const Tensor4<S>& a, const Tensor4<S>& b, Tensor4<S>& y) {
  y.resize(a.n, a.c + b.c, a.h, a.w);
  for (int i = 0; i < a.n; ++i) {
    y.plane(i).topRows(a.c) = a.plane(i);
    y.plane(i).bottomRows(b.c) = b.plane(i);
  }
}

template <typename S>
void split_channels_add(const Tensor4<S>& g, Tensor4<S>& ga, Tensor4<S>& gb) {
  for (int i = 0; i < g.n; ++i) {
    ga.plane(i) += g.plane(i).topRows(ga.c);
    gb.plane(i) += g.plane(i).bottomRows(gb.c);
  }
}

// ---------------------------------------------------------------------------
// Hourglass module
// ---------------------------------------------------------------------------

template <typename S>
struct HourglassModule {
  static constexpr int kDepth = 4;
  int channels = 0;
  std::array<Bottleneck<S>, kDepth> down;
  std::array<Bottleneck<S>, kDepth> same;
  std::array<Bottleneck<S>, kDepth> up;
  OutputBranch<S> conf_branch, off_branch, emb_branch;
  ConvBNAct<S> proj;  // (channels + 1) -> channels, folds the confidence map in

  // conf/off are post-sigmoid; emb is raw; attn is the distillation tap
  // (output of the second same-bottleneck); next feeds the following module.
  struct Out {
    Tensor4<S> conf, off, emb, attn, next;
  };

  struct OutGrad {
    Tensor4<S> conf, off, emb, attn;
  };

  struct State {
    std::array<typename Bottleneck<S>::State, kDepth> dst, sst, ust;
    typename OutputBranch<S>::State cbs, obs, ebs;
    typename ConvBNAct<S>::State pst;
    Tensor4<S> e1, e2, e3, e4;      // encoder outputs (16x32 ... 2x4)
    Tensor4<S> s1, s2, s3, s4;      // bottom same-bottleneck outputs (2x4)
    Tensor4<S> u1, u2, u3, f;       // decoder outputs post skip-add; f is 32x64
    Tensor4<S> conf_logit, off_logit, cat;
  };

  void configure(const ModelSpec& spec) {
    channels = spec.feature_channels;
    const int mid = spec.bottleneck_mid;
    for (auto& b : down) b.configure(BottleneckKind::kDown, channels, mid);
    for (auto& b : same) b.configure(BottleneckKind::kSame, channels, mid);
    for (auto& b : up) b.configure(BottleneckKind::kUp, channels, mid);
    conf_branch.configure(channels, spec.conf_channels);
    off_branch.configure(channels, spec.offset_channels);
    emb_branch.configure(channels, spec.embedding_channels);
    proj.configure(channels + spec.conf_channels, channels, 1, 1, 0);
  }

  void init(Rng& rng) {
    for (auto& b : down) b.init(rng);
    for (auto& b : same) b.init(rng);
    for (auto& b : up) b.init(rng);
    // Confidence starts strongly negative so the grid begins near-empty.
    conf_branch.init(rng, -2.0);
    off_branch.init(rng);
    emb_branch.init(rng);
    proj.init(rng);
  }

  void forward(const Tensor4<S>& x, Out& out, State& st, bool train) {
    down[0].forward(x, st.e1, st.dst[0], train);
    down[1].forward(st.e1, st.e2, st.dst[1], train);
    down[2].forward(st.e2, st.e3, st.dst[2], train);
    down[3].forward(st.e3, st.e4, st.dst[3], train);
    same[0].forward(st.e4, st.s1, st.sst[0], train);
    same[1].forward(st.s1, st.s2, st.sst[1], train);
    same[2].forward(st.s2, st.s3, st.sst[2], train);
    same[3].forward(st.s3, st.s4, st.sst[3], train);
    out.attn = st.s2;

    up[0].forward(st.s4, st.u1, st.ust[0], train);
    st.u1.data += st.e3.data;
    up[1].forward(st.u1, st.u2, st.ust[1], train);
    st.u2.data += st.e2.data;
    up[2].forward(st.u2, st.u3, st.ust[2], train);
    st.u3.data += st.e1.data;
    up[3].forward(st.u3, st.f, st.ust[3], train);
    st.f.data += x.data;

    conf_branch.forward(st.f, st.conf_logit, st.cbs, train);
    sigmoid_forward(st.conf_logit, out.conf);
    off_branch.forward(st.f, st.off_logit, st.obs, train);
    sigmoid_forward(st.off_logit, out.off);
    emb_branch.forward(st.f, out.emb, st.ebs, train);

    concat_channels(st.f, out.conf, st.cat);
    proj.forward(st.cat, out.next, st.pst, train);
  }

  // g_next may be null when no later module consumed `next`.
  void backward(const Tensor4<S>& x, State& st, const Out& out, const OutGrad& g,
                const Tensor4<S>* g_next, Tensor4<S>& gx) {
    Tensor4<S> g_f(st.f.n, st.f.c, st.f.h, st.f.w);
    Tensor4<S> g_conf = g.conf;  // grads w.r.t. the squashed confidence
    if (g_next) {
      Tensor4<S> g_cat(st.cat.n, st.cat.c, st.cat.h, st.cat.w);
      proj.backward(st.cat, st.pst, *g_next, &g_cat);
      split_channels_add(g_cat, g_f, g_conf);
    }

    Tensor4<S> g_logit(out.conf.n, out.conf.c, out.conf.h, out.conf.w);
    sigmoid_backward(out.conf, g_conf, g_logit);
    conf_branch.backward(st.f, st.cbs, g_logit, &g_f);

    Tensor4<S> g_off_logit(out.off.n, out.off.c, out.off.h, out.off.w);
    sigmoid_backward(out.off, g.off, g_off_logit);
    off_branch.backward(st.f, st.obs, g_off_logit, &g_f);

    emb_branch.backward(st.f, st.ebs, g.emb, &g_f);

    // decoder (skip additions feed the encoder-side gradients)
    Tensor4<S> g_u3(st.u3.n, st.u3.c, st.u3.h, st.u3.w);
    up[3].backward(st.u3, st.ust[3], g_f, &g_u3);
    Tensor4<S> g_u2(st.u2.n, st.u2.c, st.u2.h, st.u2.w);
    up[2].backward(st.u2, st.ust[2], g_u3, &g_u2);
    Tensor4<S> g_u1(st.u1.n, st.u1.c, st.u1.h, st.u1.w);
    up[1].backward(st.u1, st.ust[1], g_u2, &g_u1);
    Tensor4<S> g_s4(st.s4.n, st.s4.c, st.s4.h, st.s4.w);
    up[0].backward(st.s4, st.ust[0], g_u1, &g_s4);

    Tensor4<S> g_s3(g_s4.n, g_s4.c, g_s4.h, g_s4.w);
    same[3].backward(st.s3, st.sst[3], g_s4, &g_s3);
    Tensor4<S> g_s2(g_s3.n, g_s3.c, g_s3.h, g_s3.w);
    same[2].backward(st.s2, st.sst[2], g_s3, &g_s2);
    g_s2.data += g.attn.data;  // distillation tap
    Tensor4<S> g_s1(g_s2.n, g_s2.c, g_s2.h, g_s2.w);
    same[1].backward(st.s1, st.sst[1], g_s2, &g_s1);
    Tensor4<S> g_e4(st.e4.n, st.e4.c, st.e4.h, st.e4.w);
    same[0].backward(st.e4, st.sst[0], g_s1, &g_e4);

    Tensor4<S> g_e3 = g_u1;  // skip contribution
    down[3].backward(st.e3, st.dst[3], g_e4, &g_e3);
    Tensor4<S> g_e2 = g_u2;
    down[2].backward(st.e2, st.dst[2], g_e3, &g_e2);
    Tensor4<S> g_e1 = g_u3;
    down[1].backward(st.e1, st.dst[1], g_e2, &g_e1);
    gx.data += g_f.data;  // skip from the module input straight to f
    down[0].backward(x, st.dst[0], g_e1, &gx);
  }

  void collect(const std::string& p, std::vector<ParamRef<S>>& params,
               std::vector<BufferRef<S>>& buffers) {
    for (int i = 0; i < kDepth; ++i) down[i].collect(p + ".down" + std::to_string(i), params, buffers);
    for (int i = 0; i < kDepth; ++i) same[i].collect(p + ".same" + std::to_string(i), params, buffers);
    for (int i = 0; i < kDepth; ++i) up[i].collect(p + ".up" + std::to_string(i), params, buffers);
    conf_branch.collect(p + ".conf", params, buffers);
    off_branch.collect(p + ".off", params, buffers);
    emb_branch.collect(p + ".emb", params, buffers);
    proj.collect(p + ".proj", params, buffers);
  }
};

// ---------------------------------------------------------------------------
// Resizing network: 3x256x512 -> feature x 32x64
// ---------------------------------------------------------------------------

template <typename S>
struct ResizingNet {
  std::array<ConvBNAct<S>, 3> cba;

  struct State {
    std::array<typename ConvBNAct<S>::State, 3> st;
    Tensor4<S> t1, t2;
  };

  void configure(const ModelSpec& spec) {
    const int f = spec.feature_channels;
    cba[0].configure(3, f / 4, 3, 2, 1);
    cba[1].configure(f / 4, f / 2, 3, 2, 1);
    cba[2].configure(f / 2, f, 3, 2, 1);
  }

  void init(Rng& rng) {
    for (auto& c : cba) c.init(rng);
  }

  void forward(const Tensor4<S>& x, Tensor4<S>& y, State& st, bool train) {
    cba[0].forward(x, st.t1, st.st[0], train);
    cba[1].forward(st.t1, st.t2, st.st[1], train);
    cba[2].forward(st.t2, y, st.st[2], train);
  }

  void backward(const Tensor4<S>& x, State& st, const Tensor4<S>& gy) {
    Tensor4<S> g2(st.t2.n, st.t2.c, st.t2.h, st.t2.w);
    cba[2].backward(st.t2, st.st[2], gy, &g2);
    Tensor4<S> g1(st.t1.n, st.t1.c, st.t1.h, st.t1.w);
    cba[1].backward(st.t1, st.st[1], g2, &g1);
    cba[0].backward(x, st.st[0], g1, nullptr);  // no image gradient needed
  }

  void collect(const std::string& p, std::vector<ParamRef<S>>& params,
               std::vector<BufferRef<S>>& buffers) {
    for (int i = 0; i < 3; ++i) cba[i].collect(p + ".cba" + std::to_string(i), params, buffers);
  }
};

// ---------------------------------------------------------------------------
// Full model
// ---------------------------------------------------------------------------

template <typename S>
struct Model {
  ModelSpec spec;
  ResizingNet<S> resize;
  std::vector<HourglassModule<S>> modules;

  struct Outputs {
    std::vector<typename HourglassModule<S>::Out> mods;
  };

  struct Grads {
    std::vector<typename HourglassModule<S>::OutGrad> mods;
  };

  struct State {
    typename ResizingNet<S>::State resize_st;
    Tensor4<S> resized;
    std::vector<typename HourglassModule<S>::State> mod_st;
  };

  void build(const ModelSpec& s) {
    s.validate();
    spec = s;
    resize.configure(spec);
    modules.assign(spec.n_hourglass, HourglassModule<S>{});
    for (auto& m : modules) m.configure(spec);
  }

  void init(std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x6d6f64656cULL));
    resize.init(rng);
    for (auto& m : modules) m.init(rng);
  }

  int n_modules() const { return static_cast<int>(modules.size()); }

  // Runs the front-end plus the first n_active modules. train=true uses batch
  // statistics and fills st with everything backward() needs; train=false uses
  // running statistics (inference mode).
  Outputs forward(const Tensor4<S>& image, int n_active, State& st, bool train) {
    if (n_active < 1 || n_active > n_modules()) {
      throw BoundsError("forward: n_active " + std::to_string(n_active) + " outside [1, " +
                        std::to_string(n_modules()) + "]");
    }
    check_shape(image, image.n, 3, kInputHeight, kInputWidth, "model input");
    Outputs out;
    out.mods.resize(n_active);
    st.mod_st.resize(n_active);
    resize.forward(image, st.resized, st.resize_st, train);
    const Tensor4<S>* x = &st.resized;
    for (int m = 0; m < n_active; ++m) {
      modules[m].forward(*x, out.mods[m], st.mod_st[m], train);
      x = &out.mods[m].next;
    }
    return out;
  }

  Outputs infer(const Tensor4<S>& image, int n_active) {
    State scratch;
    return forward(image, n_active, scratch, false);
  }

  Grads make_zero_grads(const Outputs& out) const {
    Grads g;
    g.mods.resize(out.mods.size());
    for (std::size_t m = 0; m < out.mods.size(); ++m) {
      const auto& o = out.mods[m];
      g.mods[m].conf.resize(o.conf.n, o.conf.c, o.conf.h, o.conf.w);
      g.mods[m].off.resize(o.off.n, o.off.c, o.off.h, o.off.w);
      g.mods[m].emb.resize(o.emb.n, o.emb.c, o.emb.h, o.emb.w);
      g.mods[m].attn.resize(o.attn.n, o.attn.c, o.attn.h, o.attn.w);
    }
    return g;
  }

  // Accumulates parameter gradients for a forward pass recorded in st.
  void backward(const Tensor4<S>& image, State& st, const Outputs& out, const Grads& g) {
    const int n_active = static_cast<int>(out.mods.size());
    Tensor4<S> g_next;
    bool have_next = false;
    for (int m = n_active - 1; m >= 0; --m) {
      const Tensor4<S>& x = (m == 0) ? st.resized : out.mods[m - 1].next;
      Tensor4<S> gx(x.n, x.c, x.h, x.w);
      modules[m].backward(x, st.mod_st[m], out.mods[m], g.mods[m],
                          have_next ? &g_next : nullptr, gx);
      g_next = std::move(gx);
      have_next = true;
    }
    resize.backward(image, st.resize_st, g_next);
  }

  void zero_grad() {
    for (auto& p : params()) p.grad->setZero();
  }

  std::vector<ParamRef<S>> params() {
    std::vector<ParamRef<S>> ps;
    std::vector<BufferRef<S>> bs;
    collect(ps, bs);
    return ps;
  }

  std::vector<BufferRef<S>> buffers() {
    std::vector<ParamRef<S>> ps;
    std::vector<BufferRef<S>> bs;
    collect(ps, bs);
    return bs;
  }

  void collect(std::vector<ParamRef<S>>& ps, std::vector<BufferRef<S>>& bs) {
    resize.collect("resize", ps, bs);
    for (int m = 0; m < n_modules(); ++m) {
      modules[m].collect("hg" + std::to_string(m), ps, bs);
    }
  }

  long param_count() {
    long total = 0;
    for (const auto& p : params()) total += static_cast<long>(p.value->size());
    return total;
  }

  // Truncation to the first n modules; parameters and running statistics are
  // copied verbatim, so outputs match the parent's first n outputs bit for bit.
  Model clip(int n) const {
    if (n < 1 || n > static_cast<int>(modules.size())) {
      throw BoundsError("clip: n " + std::to_string(n) + " outside [1, " +
                        std::to_string(modules.size()) + "]");
    }
    Model out;
    out.spec = spec;
    out.spec.n_hourglass = n;
    out.resize = resize;
    out.modules.assign(modules.begin(), modules.begin() + n);
    return out;
  }
};

}  // namespace keylane::net
