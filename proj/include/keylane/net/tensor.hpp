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
#include <string>
#include <vector>

#include "keylane/common.hpp"

namespace keylane::net {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatRM = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using MapMatRM = Eigen::Map<MatRM<Scalar>>;
template <typename Scalar>
using ConstMapMatRM = Eigen::Map<const MatRM<Scalar>>;

// Dense NCHW tensor. Per-sample data is a contiguous (C, H*W) row-major block,
// which is exactly the shape a GEMM-based convolution wants.
template <typename Scalar>
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  Vec<Scalar> data;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_) { resize(n_, c_, h_, w_); }

  void resize(int n_, int c_, int h_, int w_) {
    n = n_;
    c = c_;
    h = h_;
    w = w_;
    data.setZero(static_cast<Eigen::Index>(n) * c * h * w);
  }

  void set_zero() { data.setZero(); }
  Eigen::Index size() const { return data.size(); }
  int plane_size() const { return h * w; }

  Scalar* sample(int i) { return data.data() + static_cast<Eigen::Index>(i) * c * h * w; }
  const Scalar* sample(int i) const {
    return data.data() + static_cast<Eigen::Index>(i) * c * h * w;
  }

  // (C, H*W) view of one sample.
  MapMatRM<Scalar> plane(int i) { return MapMatRM<Scalar>(sample(i), c, h * w); }
  ConstMapMatRM<Scalar> plane(int i) const {
    return ConstMapMatRM<Scalar>(sample(i), c, h * w);
  }

  Scalar& at(int i, int ci, int y, int x) {
    return data[((static_cast<Eigen::Index>(i) * c + ci) * h + y) * w + x];
  }
  Scalar at(int i, int ci, int y, int x) const {
    return data[((static_cast<Eigen::Index>(i) * c + ci) * h + y) * w + x];
  }

  bool same_shape(const Tensor4& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  template <typename Other>
  Tensor4<Other> cast() const {
    Tensor4<Other> out(n, c, h, w);
    out.data = data.template cast<Other>();
    return out;
  }
};

template <typename Scalar>
void check_shape(const Tensor4<Scalar>& t, int n, int c, int h, int w, const char* what) {
  if (t.n != n || t.c != c || t.h != h || t.w != w) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(n) + "x" +
                     std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w) +
                     ", got " + std::to_string(t.n) + "x" + std::to_string(t.c) + "x" +
                     std::to_string(t.h) + "x" + std::to_string(t.w));
  }
}

// Named trainable tensor (flat storage) with its gradient accumulator.
template <typename Scalar>
struct ParamRef {
  std::string name;
  Vec<Scalar>* value = nullptr;
  Vec<Scalar>* grad = nullptr;
};

// Named non-trainable tensor (e.g. batch-norm running statistics).
template <typename Scalar>
struct BufferRef {
  std::string name;
  Vec<Scalar>* value = nullptr;
};

}  // namespace keylane::net
