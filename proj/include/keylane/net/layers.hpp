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

#include <cmath>
#include <string>
#include <vector>

#include "keylane/net/tensor.hpp"

namespace keylane::net {

// ---------------------------------------------------------------------------
// im2col / col2im
//
// cols is (c*k*k) x (oh*ow), row-major. col2im is the exact adjoint scatter,
// which also serves as the forward pass of the transposed convolution.
// ---------------------------------------------------------------------------

template <typename S>
void im2col(const S* x, int c, int h, int w, int k, int stride, int pad, int oh, int ow,
            MatRM<S>& cols) {
  cols.resize(static_cast<Eigen::Index>(c) * k * k, static_cast<Eigen::Index>(oh) * ow);
  for (int ci = 0; ci < c; ++ci) {
    const S* xc = x + static_cast<Eigen::Index>(ci) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        S* row = cols.data() + (static_cast<Eigen::Index>(ci) * k * k + ky * k + kx) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          S* dst = row + static_cast<Eigen::Index>(oy) * ow;
          if (iy < 0 || iy >= h) {
            for (int ox = 0; ox < ow; ++ox) dst[ox] = S(0);
            continue;
          }
          const S* src = xc + static_cast<Eigen::Index>(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : S(0);
          }
        }
      }
    }
  }
}

template <typename S>
void col2im_add(const MatRM<S>& cols, S* x, int c, int h, int w, int k, int stride, int pad,
                int oh, int ow) {
  for (int ci = 0; ci < c; ++ci) {
    S* xc = x + static_cast<Eigen::Index>(ci) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const S* row =
            cols.data() + (static_cast<Eigen::Index>(ci) * k * k + ky * k + kx) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          const S* src = row + static_cast<Eigen::Index>(oy) * ow;
          S* dst = xc + static_cast<Eigen::Index>(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Conv2d
// ---------------------------------------------------------------------------

template <typename S>
struct Conv2d {
  int in_c = 0, out_c = 0, k = 1, stride = 1, pad = 0;
  Vec<S> w, b;    // w: out_c x (in_c*k*k) row-major
  Vec<S> gw, gb;

  void configure(int in_channels, int out_channels, int kernel, int stride_, int pad_) {
    in_c = in_channels;
    out_c = out_channels;
    k = kernel;
    stride = stride_;
    pad = pad_;
    w.setZero(static_cast<Eigen::Index>(out_c) * in_c * k * k);
    b.setZero(out_c);
    gw.setZero(w.size());
    gb.setZero(b.size());
  }

  void init(Rng& rng, double bias_value = 0.0) {
    const double fan_in = static_cast<double>(in_c) * k * k;
    const double a = 0.25;  // PReLU slope at init
    const double std = std::sqrt(2.0 / ((1.0 + a * a) * fan_in));
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = static_cast<S>(rng.normal() * std);
    b.setConstant(static_cast<S>(bias_value));
  }

  int out_size(int in) const { return (in + 2 * pad - k) / stride + 1; }
  bool is_pointwise() const { return k == 1 && stride == 1 && pad == 0; }

  ConstMapMatRM<S> wmat() const { return ConstMapMatRM<S>(w.data(), out_c, in_c * k * k); }
  MapMatRM<S> gwmat() { return MapMatRM<S>(gw.data(), out_c, in_c * k * k); }

  void forward(const Tensor4<S>& x, Tensor4<S>& y) const {
    const int oh = out_size(x.h), ow = out_size(x.w);
    y.resize(x.n, out_c, oh, ow);
    MatRM<S> cols;
    for (int i = 0; i < x.n; ++i) {
      auto yp = y.plane(i);
      if (is_pointwise()) {
        yp.noalias() = wmat() * x.plane(i);
      } else {
        im2col(x.sample(i), in_c, x.h, x.w, k, stride, pad, oh, ow, cols);
        yp.noalias() = wmat() * cols;
      }
      yp.colwise() += b;
    }
  }

  // Accumulates gw/gb and, when gx is non-null, adds the input gradient.
  void backward(const Tensor4<S>& x, const Tensor4<S>& gy, Tensor4<S>* gx) {
    const int oh = gy.h, ow = gy.w;
    auto gwm = gwmat();
    MatRM<S> cols;
    for (int i = 0; i < x.n; ++i) {
      auto gyp = gy.plane(i);
      gb.noalias() += gyp.rowwise().sum();
      if (is_pointwise()) {
        gwm.noalias() += gyp * x.plane(i).transpose();
        if (gx) gx->plane(i).noalias() += wmat().transpose() * gyp;
      } else {
        im2col(x.sample(i), in_c, x.h, x.w, k, stride, pad, oh, ow, cols);
        gwm.noalias() += gyp * cols.transpose();
        if (gx) {
          cols.noalias() = wmat().transpose() * gyp;
          col2im_add(cols, gx->sample(i), in_c, x.h, x.w, k, stride, pad, oh, ow);
        }
      }
    }
  }

  void collect(const std::string& prefix, std::vector<ParamRef<S>>& params) {
    params.push_back({prefix + ".w", &w, &gw});
    params.push_back({prefix + ".b", &b, &gb});
  }
};

// ---------------------------------------------------------------------------
// ConvTranspose2d (fractionally strided conv; adjoint of Conv2d)
// ---------------------------------------------------------------------------

template <typename S>
struct ConvTranspose2d {
  int in_c = 0, out_c = 0, k = 1, stride = 1, pad = 0, out_pad = 0;
  Vec<S> w, b;    // w: in_c x (out_c*k*k) row-major
  Vec<S> gw, gb;

  void configure(int in_channels, int out_channels, int kernel, int stride_, int pad_,
                 int out_pad_) {
    in_c = in_channels;
    out_c = out_channels;
    k = kernel;
    stride = stride_;
    pad = pad_;
    out_pad = out_pad_;
    w.setZero(static_cast<Eigen::Index>(in_c) * out_c * k * k);
    b.setZero(out_c);
    gw.setZero(w.size());
    gb.setZero(b.size());
  }

  void init(Rng& rng) {
    const double fan_in = static_cast<double>(in_c) * k * k;
    const double a = 0.25;
    const double std = std::sqrt(2.0 / ((1.0 + a * a) * fan_in));
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = static_cast<S>(rng.normal() * std);
    b.setZero();
  }

  int out_size(int in) const { return stride * (in - 1) + k - 2 * pad + out_pad; }

  ConstMapMatRM<S> wmat() const { return ConstMapMatRM<S>(w.data(), in_c, out_c * k * k); }
  MapMatRM<S> gwmat() { return MapMatRM<S>(gw.data(), in_c, out_c * k * k); }

  void forward(const Tensor4<S>& x, Tensor4<S>& y) const {
    const int oh = out_size(x.h), ow = out_size(x.w);
    y.resize(x.n, out_c, oh, ow);
    MatRM<S> cols;
    for (int i = 0; i < x.n; ++i) {
      cols.noalias() = wmat().transpose() * x.plane(i);  // (out_c*k*k) x (xh*xw)
      col2im_add(cols, y.sample(i), out_c, oh, ow, k, stride, pad, x.h, x.w);
      y.plane(i).colwise() += b;
    }
  }

  void backward(const Tensor4<S>& x, const Tensor4<S>& gy, Tensor4<S>* gx) {
    auto gwm = gwmat();
    MatRM<S> cols;
    for (int i = 0; i < x.n; ++i) {
      auto gyp = gy.plane(i);
      gb.noalias() += gyp.rowwise().sum();
      im2col(gy.sample(i), out_c, gy.h, gy.w, k, stride, pad, x.h, x.w, cols);
      gwm.noalias() += x.plane(i) * cols.transpose();
      if (gx) gx->plane(i).noalias() += wmat() * cols;
    }
  }

  void collect(const std::string& prefix, std::vector<ParamRef<S>>& params) {
    params.push_back({prefix + ".w", &w, &gw});
    params.push_back({prefix + ".b", &b, &gb});
  }
};

// ---------------------------------------------------------------------------
// BatchNorm2d
// ---------------------------------------------------------------------------

template <typename S>
struct BatchNorm2d {
  int c = 0;
  S eps = static_cast<S>(1e-5);
  S momentum = static_cast<S>(0.1);
  Vec<S> gamma, beta, ggamma, gbeta;
  Vec<S> running_mean, running_var;

  struct Cache {
    Tensor4<S> xhat;
    Vec<S> inv_std;
  };

  void configure(int channels) {
    c = channels;
    gamma.setOnes(c);
    beta.setZero(c);
    ggamma.setZero(c);
    gbeta.setZero(c);
    running_mean.setZero(c);
    running_var.setOnes(c);
  }

  void infer(const Tensor4<S>& x, Tensor4<S>& y) const {
    y.resize(x.n, x.c, x.h, x.w);
    for (int i = 0; i < x.n; ++i) {
      for (int ci = 0; ci < c; ++ci) {
        const S inv = gamma[ci] / std::sqrt(running_var[ci] + eps);
        y.plane(i).row(ci).array() = (x.plane(i).row(ci).array() - running_mean[ci]) * inv + beta[ci];
      }
    }
  }

  void train_forward(const Tensor4<S>& x, Tensor4<S>& y, Cache& cache) {
    y.resize(x.n, x.c, x.h, x.w);
    cache.xhat.resize(x.n, x.c, x.h, x.w);
    cache.inv_std.resize(c);
    const Eigen::Index m = static_cast<Eigen::Index>(x.n) * x.h * x.w;
    for (int ci = 0; ci < c; ++ci) {
      S sum = S(0);
      for (int i = 0; i < x.n; ++i) sum += x.plane(i).row(ci).sum();
      const S mean = sum / static_cast<S>(m);
      S ss = S(0);
      for (int i = 0; i < x.n; ++i) ss += (x.plane(i).row(ci).array() - mean).square().sum();
      const S var = ss / static_cast<S>(m);
      const S inv = S(1) / std::sqrt(var + eps);
      cache.inv_std[ci] = inv;
      for (int i = 0; i < x.n; ++i) {
        cache.xhat.plane(i).row(ci).array() = (x.plane(i).row(ci).array() - mean) * inv;
        y.plane(i).row(ci).array() = cache.xhat.plane(i).row(ci).array() * gamma[ci] + beta[ci];
      }
      const S unbiased = (m > 1) ? ss / static_cast<S>(m - 1) : var;
      running_mean[ci] = (S(1) - momentum) * running_mean[ci] + momentum * mean;
      running_var[ci] = (S(1) - momentum) * running_var[ci] + momentum * unbiased;
    }
  }

  void backward(const Cache& cache, const Tensor4<S>& gy, Tensor4<S>* gx) {
    const Eigen::Index m = static_cast<Eigen::Index>(gy.n) * gy.h * gy.w;
    for (int ci = 0; ci < c; ++ci) {
      S s1 = S(0), s2 = S(0);
      for (int i = 0; i < gy.n; ++i) {
        s1 += gy.plane(i).row(ci).sum();
        s2 += (gy.plane(i).row(ci).array() * cache.xhat.plane(i).row(ci).array()).sum();
      }
      gbeta[ci] += s1;
      ggamma[ci] += s2;
      if (gx) {
        const S scale = gamma[ci] * cache.inv_std[ci];
        const S mean_gy = s1 / static_cast<S>(m);
        const S mean_gyx = s2 / static_cast<S>(m);
        for (int i = 0; i < gy.n; ++i) {
          gx->plane(i).row(ci).array() +=
              scale * (gy.plane(i).row(ci).array() - mean_gy -
                       cache.xhat.plane(i).row(ci).array() * mean_gyx);
        }
      }
    }
  }

  void collect(const std::string& prefix, std::vector<ParamRef<S>>& params,
               std::vector<BufferRef<S>>& buffers) {
    params.push_back({prefix + ".gamma", &gamma, &ggamma});
    params.push_back({prefix + ".beta", &beta, &gbeta});
    buffers.push_back({prefix + ".running_mean", &running_mean});
    buffers.push_back({prefix + ".running_var", &running_var});
  }
};

// ---------------------------------------------------------------------------
// PReLU (per-channel slope)
// ---------------------------------------------------------------------------

template <typename S>
struct PReLU {
  int c = 0;
  Vec<S> a, ga;

  void configure(int channels) {
    c = channels;
    a.setConstant(c, static_cast<S>(0.25));
    ga.setZero(c);
  }

  void forward(const Tensor4<S>& x, Tensor4<S>& y) const {
    y.resize(x.n, x.c, x.h, x.w);
    for (int i = 0; i < x.n; ++i) {
      for (int ci = 0; ci < c; ++ci) {
        auto xr = x.plane(i).row(ci).array();
        y.plane(i).row(ci).array() = (xr > S(0)).select(xr, xr * a[ci]);
      }
    }
  }

  void backward(const Tensor4<S>& x, const Tensor4<S>& gy, Tensor4<S>* gx) {
    for (int i = 0; i < x.n; ++i) {
      for (int ci = 0; ci < c; ++ci) {
        auto xr = x.plane(i).row(ci).array();
        auto gr = gy.plane(i).row(ci).array();
        ga[ci] += (gr * xr * (xr <= S(0)).template cast<S>()).sum();
        if (gx) {
          gx->plane(i).row(ci).array() += (xr > S(0)).select(gr, gr * a[ci]);
        }
      }
    }
  }

  void collect(const std::string& prefix, std::vector<ParamRef<S>>& params) {
    params.push_back({prefix + ".a", &a, &ga});
  }
};

// ---------------------------------------------------------------------------
// Elementwise helpers
// ---------------------------------------------------------------------------

template <typename S>
S stable_sigmoid(S x) {
  if (x >= S(0)) {
    return S(1) / (S(1) + std::exp(-x));
  }
  const S e = std::exp(x);
  return e / (S(1) + e);
}

template <typename S>
void sigmoid_forward(const Tensor4<S>& x, Tensor4<S>& y) {
  y.resize(x.n, x.c, x.h, x.w);
  for (Eigen::Index i = 0; i < x.size(); ++i) y.data[i] = stable_sigmoid(x.data[i]);
}

// gx += gy * y * (1 - y), with y the sigmoid output.
template <typename S>
void sigmoid_backward(const Tensor4<S>& y, const Tensor4<S>& gy, Tensor4<S>& gx) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    gx.data[i] += gy.data[i] * y.data[i] * (S(1) - y.data[i]);
  }
}

// Nearest-neighbor 2x upsample; backward is a 2x2 sum pool.
template <typename S>
void upsample2x_forward(const Tensor4<S>& x, Tensor4<S>& y) {
  y.resize(x.n, x.c, x.h * 2, x.w * 2);
  for (int i = 0; i < x.n; ++i) {
    for (int ci = 0; ci < x.c; ++ci) {
      for (int yy = 0; yy < y.h; ++yy) {
        for (int xx = 0; xx < y.w; ++xx) {
          y.at(i, ci, yy, xx) = x.at(i, ci, yy / 2, xx / 2);
        }
      }
    }
  }
}

template <typename S>
void upsample2x_backward(const Tensor4<S>& gy, Tensor4<S>& gx) {
  for (int i = 0; i < gx.n; ++i) {
    for (int ci = 0; ci < gx.c; ++ci) {
      for (int yy = 0; yy < gy.h; ++yy) {
        for (int xx = 0; xx < gy.w; ++xx) {
          gx.at(i, ci, yy / 2, xx / 2) += gy.at(i, ci, yy, xx);
        }
      }
    }
  }
}

}  // namespace keylane::net
