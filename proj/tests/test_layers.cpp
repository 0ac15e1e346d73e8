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
#include <doctest.h>

#include "keylane/net/layers.hpp"
#include "keylane/net/model.hpp"
#include "testutil.hpp"

using namespace keylane;
using net::Tensor4;

namespace {

// Loss surrogate: random fixed projection of the output tensor; its gradient
// w.r.t. the output is just the projection weights.
struct Probe {
  Tensor4<double> weights;
  explicit Probe(const Tensor4<double>& like) {
    weights.resize(like.n, like.c, like.h, like.w);
    Rng rng(99);
    testutil::randomize(weights, rng);
  }
  double operator()(const Tensor4<double>& y) const {
    return (y.data.array() * weights.data.array()).sum();
  }
};

// Samples a few coordinates from a vector deterministically.
std::vector<Eigen::Index> sample_coords(Eigen::Index size, int count, Rng& rng) {
  std::vector<Eigen::Index> out;
  for (int i = 0; i < count; ++i) out.push_back(rng.uniform_int(0, static_cast<int>(size - 1)));
  return out;
}

constexpr double kTol = 1e-5;
constexpr double kH = 1e-6;

}  // namespace

TEST_SUITE("layers") {

TEST_CASE("conv2d forward matches a naive convolution") {
  Rng rng(1);
  net::Conv2d<double> conv;
  conv.configure(3, 5, 3, 2, 1);
  conv.init(rng);
  Tensor4<double> x(2, 3, 9, 11), y;
  testutil::randomize(x, rng);
  conv.forward(x, y);
  CHECK(y.h == 5);
  CHECK(y.w == 6);
  // naive reference
  for (int n = 0; n < 2; ++n) {
    for (int oc = 0; oc < 5; ++oc) {
      for (int oy = 0; oy < y.h; ++oy) {
        for (int ox = 0; ox < y.w; ++ox) {
          double acc = conv.b[oc];
          for (int ic = 0; ic < 3; ++ic) {
            for (int ky = 0; ky < 3; ++ky) {
              for (int kx = 0; kx < 3; ++kx) {
                const int iy = oy * 2 - 1 + ky, ix = ox * 2 - 1 + kx;
                if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                acc += conv.w[((oc * 3 + ic) * 3 + ky) * 3 + kx] * x.at(n, ic, iy, ix);
              }
            }
          }
          CHECK(y.at(n, oc, oy, ox) == doctest::Approx(acc).epsilon(1e-10));
        }
      }
    }
  }
}

TEST_CASE("conv2d backward matches finite differences") {
  Rng rng(2);
  for (auto [k, stride, pad] : {std::tuple{3, 1, 1}, {3, 2, 1}, {1, 1, 0}}) {
    net::Conv2d<double> conv;
    conv.configure(3, 4, k, stride, pad);
    conv.init(rng);
    Tensor4<double> x(2, 3, 8, 10), y;
    testutil::randomize(x, rng);
    conv.forward(x, y);
    Probe probe(y);

    Tensor4<double> gx(x.n, x.c, x.h, x.w);
    conv.gw.setZero();
    conv.gb.setZero();
    conv.backward(x, probe.weights, &gx);

    auto loss = [&]() {
      Tensor4<double> out;
      conv.forward(x, out);
      return probe(out);
    };
    for (auto i : sample_coords(x.size(), 6, rng)) {
      CHECK(testutil::rel_err(gx.data[i], testutil::fd_scalar(loss, &x.data[i], kH)) < kTol);
    }
    for (auto i : sample_coords(conv.w.size(), 6, rng)) {
      CHECK(testutil::rel_err(conv.gw[i], testutil::fd_scalar(loss, &conv.w[i], kH)) < kTol);
    }
    CHECK(testutil::rel_err(conv.gb[1], testutil::fd_scalar(loss, &conv.b[1], kH)) < kTol);
  }
}

TEST_CASE("transposed conv doubles the spatial size and matches finite differences") {
  Rng rng(3);
  for (auto [k, pad, outpad] : {std::tuple{3, 1, 1}, {1, 0, 1}}) {
    net::ConvTranspose2d<double> conv;
    conv.configure(3, 4, k, 2, pad, outpad);
    conv.init(rng);
    Tensor4<double> x(2, 3, 4, 5), y;
    testutil::randomize(x, rng);
    conv.forward(x, y);
    CHECK(y.h == 8);
    CHECK(y.w == 10);
    Probe probe(y);

    Tensor4<double> gx(x.n, x.c, x.h, x.w);
    conv.gw.setZero();
    conv.gb.setZero();
    conv.backward(x, probe.weights, &gx);

    auto loss = [&]() {
      Tensor4<double> out;
      conv.forward(x, out);
      return probe(out);
    };
    for (auto i : sample_coords(x.size(), 6, rng)) {
      CHECK(testutil::rel_err(gx.data[i], testutil::fd_scalar(loss, &x.data[i], kH)) < kTol);
    }
    for (auto i : sample_coords(conv.w.size(), 6, rng)) {
      CHECK(testutil::rel_err(conv.gw[i], testutil::fd_scalar(loss, &conv.w[i], kH)) < kTol);
    }
    CHECK(testutil::rel_err(conv.gb[2], testutil::fd_scalar(loss, &conv.b[2], kH)) < kTol);
  }
}

TEST_CASE("batch norm: train statistics, running stats, and gradients") {
  Rng rng(4);
  net::BatchNorm2d<double> bn;
  bn.configure(3);
  Tensor4<double> x(2, 3, 4, 6), y;
  testutil::randomize(x, rng, -2.0, 3.0);
  bn.gamma << 1.5, 0.7, 1.0;
  bn.beta << 0.1, -0.2, 0.0;

  net::BatchNorm2d<double>::Cache cache;
  bn.train_forward(x, y, cache);

  // normalized activations have zero mean / unit variance per channel
  for (int c = 0; c < 3; ++c) {
    double sum = 0, sq = 0;
    for (int n = 0; n < 2; ++n) {
      sum += cache.xhat.plane(n).row(c).sum();
      sq += cache.xhat.plane(n).row(c).array().square().sum();
    }
    const double m = 2 * 4 * 6;
    CHECK(sum / m == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(sq / m == doctest::Approx(1.0).epsilon(1e-4));  // off by eps/(var+eps)
  }

  Probe probe(y);
  Tensor4<double> gx(x.n, x.c, x.h, x.w);
  bn.ggamma.setZero();
  bn.gbeta.setZero();
  bn.backward(cache, probe.weights, &gx);

  auto loss = [&]() {
    Tensor4<double> out;
    net::BatchNorm2d<double>::Cache cc;
    auto rm = bn.running_mean;
    auto rv = bn.running_var;  // keep running stats untouched by probes
    bn.train_forward(x, out, cc);
    bn.running_mean = rm;
    bn.running_var = rv;
    return probe(out);
  };
  for (auto i : sample_coords(x.size(), 8, rng)) {
    CHECK(testutil::rel_err(gx.data[i], testutil::fd_scalar(loss, &x.data[i], kH)) < kTol);
  }
  for (int c = 0; c < 3; ++c) {
    CHECK(testutil::rel_err(bn.ggamma[c], testutil::fd_scalar(loss, &bn.gamma[c], kH)) < kTol);
    CHECK(testutil::rel_err(bn.gbeta[c], testutil::fd_scalar(loss, &bn.beta[c], kH)) < kTol);
  }

  // inference path uses running statistics
  net::BatchNorm2d<double> frozen;
  frozen.configure(1);
  frozen.running_mean[0] = 2.0;
  frozen.running_var[0] = 4.0;
  Tensor4<double> x1(1, 1, 1, 2), y1;
  x1.data << 2.0, 4.0;
  frozen.infer(x1, y1);
  CHECK(y1.data[0] == doctest::Approx(0.0));
  CHECK(y1.data[1] == doctest::Approx(2.0 / std::sqrt(4.0 + 1e-5)).epsilon(1e-6));
}

TEST_CASE("prelu gradients") {
  Rng rng(5);
  net::PReLU<double> act;
  act.configure(3);
  act.a << 0.25, 0.1, 0.9;
  Tensor4<double> x(2, 3, 3, 5), y;
  testutil::randomize(x, rng);
  act.forward(x, y);
  Probe probe(y);
  Tensor4<double> gx(x.n, x.c, x.h, x.w);
  act.ga.setZero();
  act.backward(x, probe.weights, &gx);
  auto loss = [&]() {
    Tensor4<double> out;
    act.forward(x, out);
    return probe(out);
  };
  for (auto i : sample_coords(x.size(), 8, rng)) {
    CHECK(testutil::rel_err(gx.data[i], testutil::fd_scalar(loss, &x.data[i], kH)) < kTol);
  }
  for (int c = 0; c < 3; ++c) {
    CHECK(testutil::rel_err(act.ga[c], testutil::fd_scalar(loss, &act.a[c], kH)) < kTol);
  }
}

TEST_CASE("sigmoid is bounded and differentiable") {
  Rng rng(6);
  Tensor4<double> x(1, 2, 4, 4), y;
  testutil::randomize(x, rng, -30.0, 30.0);
  net::sigmoid_forward(x, y);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    CHECK(y.data[i] >= 0.0);
    CHECK(y.data[i] <= 1.0);
  }
  Probe probe(y);
  Tensor4<double> gx(x.n, x.c, x.h, x.w);
  net::sigmoid_backward(y, probe.weights, gx);
  auto loss = [&]() {
    Tensor4<double> out;
    net::sigmoid_forward(x, out);
    return probe(out);
  };
  for (auto i : sample_coords(x.size(), 8, rng)) {
    CHECK(testutil::rel_err(gx.data[i], testutil::fd_scalar(loss, &x.data[i], kH)) < kTol);
  }
}

TEST_CASE("bottleneck variants: shape and finite-difference gradients") {
  Rng rng(7);
  for (auto kind : {net::BottleneckKind::kSame, net::BottleneckKind::kDown,
                    net::BottleneckKind::kUp}) {
    net::Bottleneck<double> block;
    block.configure(kind, 8, 4);
    block.init(rng);
    Tensor4<double> x(2, 8, 4, 6), y;
    testutil::randomize(x, rng);
    typename net::Bottleneck<double>::State st;
    block.forward(x, y, st, true);
    if (kind == net::BottleneckKind::kSame) CHECK(y.h == 4);
    if (kind == net::BottleneckKind::kDown) CHECK(y.h == 2);
    if (kind == net::BottleneckKind::kUp) CHECK(y.h == 8);

    Probe probe(y);
    Tensor4<double> gx(x.n, x.c, x.h, x.w);
    std::vector<net::ParamRef<double>> params;
    std::vector<net::BufferRef<double>> buffers;
    block.collect("b", params, buffers);
    for (auto& p : params) p.grad->setZero();
    block.backward(x, st, probe.weights, &gx);

    auto loss = [&]() {
      Tensor4<double> out;
      typename net::Bottleneck<double>::State s2;
      // keep running stats fixed while probing
      std::vector<net::Vec<double>> saved;
      for (auto& b : buffers) saved.push_back(*b.value);
      block.forward(x, out, s2, true);
      for (std::size_t i = 0; i < buffers.size(); ++i) *buffers[i].value = saved[i];
      return probe(out);
    };
    for (auto i : sample_coords(x.size(), 5, rng)) {
      CHECK(testutil::rel_err(gx.data[i], testutil::fd_scalar(loss, &x.data[i], kH)) < kTol);
    }
    for (auto& p : params) {
      const auto i = sample_coords(p.value->size(), 1, rng)[0];
      CHECK(testutil::rel_err((*p.grad)[i],
                              testutil::fd_scalar(loss, &(*p.value)[i], kH)) < kTol);
    }
  }
}

}  // TEST_SUITE
