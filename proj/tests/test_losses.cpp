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

#include "keylane/loss/losses.hpp"
#include "testutil.hpp"

using namespace keylane;
using loss::AttnMat;

namespace {

GroundTruthGrid single_cell_gt(int r, int c, double ox = 0.5, double oy = 0.5) {
  GroundTruthGrid g = GroundTruthGrid::zeros();
  g.exist(r, c) = 1;
  g.offset_x(r, c) = ox;
  g.offset_y(r, c) = oy;
  g.instance(r, c) = 1;
  return g;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("exist loss: perfect, half-confident, empty") {
  auto gt = single_cell_gt(3, 7);
  auto p = PredictionGrid<double>::zeros();
  p.confidence(3, 7) = 1.0;
  CHECK(loss::exist_loss(p, gt) == 0.0);
  p.confidence(3, 7) = 0.5;
  CHECK(loss::exist_loss(p, gt) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(loss::exist_loss(p, GroundTruthGrid::zeros()) == 0.0);
}

TEST_CASE("non-exist loss: gate and regularizer") {
  auto gt = single_cell_gt(0, 0);  // 2047 background cells
  auto p = PredictionGrid<double>::zeros();
  CHECK(loss::non_exist_loss(p, gt) == 0.0);

  p.confidence(5, 5) = 0.5;
  const double expected = 0.25 / 2047.0 + 1e-5 * 0.25;
  CHECK(loss::non_exist_loss(p, gt) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(loss::non_exist_loss(p, gt) == doctest::Approx(1.247e-4).epsilon(1e-3));

  // below the 0.01 gate only the regularizer bites
  auto q = PredictionGrid<double>::zeros();
  q.confidence(5, 5) = 0.005;
  CHECK(loss::non_exist_loss(q, gt) == doctest::Approx(1e-5 * 2.5e-5).epsilon(1e-12));
}

TEST_CASE("offset loss: hand value and masking") {
  auto gt = single_cell_gt(2, 2, 0.5, 0.5);
  auto p = PredictionGrid<double>::zeros();
  p.offset[0](2, 2) = 0.25;
  p.offset[1](2, 2) = 0.75;
  CHECK(loss::offset_loss(p, gt) == doctest::Approx(0.125).epsilon(1e-12));

  p.offset[0](2, 2) = 0.5;
  p.offset[1](2, 2) = 0.5;
  CHECK(loss::offset_loss(p, gt) == 0.0);

  // background offsets receive exactly zero gradient
  std::array<Plane<double>, 2> g = {Plane<double>::Zero(kGridRows, kGridCols),
                                    Plane<double>::Zero(kGridRows, kGridCols)};
  p.offset[0](9, 9) = 0.9;
  loss::offset_loss_grad(p, gt, g, 1.0);
  CHECK(g[0](9, 9) == 0.0);
  CHECK(g[1](9, 9) == 0.0);
}

TEST_CASE("feature loss: ordered-pair hand value") {
  GroundTruthGrid gt = GroundTruthGrid::zeros();
  gt.exist(0, 0) = gt.exist(0, 1) = 1;
  gt.instance(0, 0) = gt.instance(0, 1) = 1;
  auto p = PredictionGrid<double>::zeros();
  p.embedding[0](0, 1) = 1.0;  // F1=(0,0,0,0), F2=(1,0,0,0)
  // ordered pairs: (1,1)=0, (1,2)=1, (2,1)=1, (2,2)=0 -> 2/4
  CHECK(loss::feature_loss(p, gt, 1.0) == doctest::Approx(0.5).epsilon(1e-12));

  // same-instance identical features -> 0
  auto q = PredictionGrid<double>::zeros();
  CHECK(loss::feature_loss(q, gt, 1.0) == 0.0);

  // different instances at or beyond the margin -> 0
  gt.instance(0, 1) = 2;
  CHECK(loss::feature_loss(p, gt, 1.0) == 0.0);
  CHECK(loss::feature_loss(p, gt, 0.5) == 0.0);
  // inside the margin the hinge is positive
  CHECK(loss::feature_loss(p, gt, 1.5) == doctest::Approx(2.0 * 0.5 / 4.0).epsilon(1e-12));
}

TEST_CASE("feature loss is invariant to instance relabeling") {
  Rng rng(21);
  const auto gt = testutil::random_gt(rng, 3);
  const auto p = testutil::random_pred<double>(rng, gt);
  GroundTruthGrid relabeled = gt;
  for (int r = 0; r < kGridRows; ++r) {
    for (int c = 0; c < kGridCols; ++c) {
      if (relabeled.instance(r, c) > 0) relabeled.instance(r, c) = 10 - relabeled.instance(r, c);
    }
  }
  CHECK(loss::feature_loss(p, gt, 1.0) ==
        doctest::Approx(loss::feature_loss(p, relabeled, 1.0)).epsilon(1e-12));
}

TEST_CASE("distillation: identical maps and single module give zero") {
  Rng rng(22);
  AttnMat<double> a(8, 8);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-1, 1);
  CHECK(loss::distillation_loss<double>({a, a, a}) == 0.0);
  CHECK(loss::distillation_loss<double>({a}) == 0.0);
  CHECK(loss::distillation_loss<double>({}) == 0.0);
}

TEST_CASE("distillation: two modules differing in one location, closed-form softmax") {
  // student energies all zero; teacher has one channel lit at one location
  AttnMat<double> student = AttnMat<double>::Zero(2, 8);
  AttnMat<double> teacher = AttnMat<double>::Zero(2, 8);
  const double delta = 0.7;
  teacher(0, 3) = std::sqrt(delta);  // G: teacher energy map = delta at cell 3

  // independent closed-form oracle over the 8-element softmax
  auto softmax8 = [](const std::array<double, 8>& g) {
    std::array<double, 8> s{};
    double mx = g[0];
    for (double v : g) mx = std::max(mx, v);
    double z = 0;
    for (int i = 0; i < 8; ++i) z += std::exp(g[i] - mx);
    for (int i = 0; i < 8; ++i) s[i] = std::exp(g[i] - mx) / z;
    return s;
  };
  std::array<double, 8> gs{};  // student: all zeros
  std::array<double, 8> gtch{};
  gtch[3] = delta;
  const auto ss = softmax8(gs);
  const auto st = softmax8(gtch);
  double expected = 0;
  for (int i = 0; i < 8; ++i) expected += (st[i] - ss[i]) * (st[i] - ss[i]);

  CHECK(loss::distillation_loss<double>({student, teacher}) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected > 0.0);
}

TEST_CASE("spatial softmax is invariant to constant shifts of the energy map") {
  Rng rng(23);
  Eigen::RowVectorX<double> g(8);
  for (int i = 0; i < 8; ++i) g[i] = rng.uniform(-3, 3);
  const auto s1 = loss::spatial_softmax<double>(g);
  Eigen::RowVectorX<double> shifted = g.array() + 17.5;
  const auto s2 = loss::spatial_softmax<double>(shifted);
  for (int i = 0; i < 8; ++i) CHECK(s1[i] == doctest::Approx(s2[i]).epsilon(1e-12));
}

TEST_CASE("total loss composes the weighted parts") {
  Rng rng(24);
  HyperParams hp;
  const auto gt = single_cell_gt(4, 4);
  loss::ModuleOutputs<double> out;
  out.grids.push_back(testutil::random_pred<double>(rng, gt));
  out.grids.push_back(testutil::random_pred<double>(rng, gt));
  AttnMat<double> a1(4, 8), a2(4, 8);
  for (Eigen::Index i = 0; i < a1.size(); ++i) a1.data()[i] = rng.uniform(-1, 1);
  for (Eigen::Index i = 0; i < a2.size(); ++i) a2.data()[i] = rng.uniform(-1, 1);
  out.activations = {a1, a2};

  const auto b = loss::total_loss(out, gt, hp);
  double exist = 0, ne = 0, off = 0, feat = 0;
  for (const auto& g : out.grids) {
    exist += loss::exist_loss(g, gt);
    ne += loss::non_exist_loss(g, gt);
    off += loss::offset_loss(g, gt);
    feat += loss::feature_loss(g, gt, 1.0);
  }
  CHECK(b.exist == doctest::Approx(exist).epsilon(1e-12));
  CHECK(b.total == doctest::Approx(hp.gamma_e * exist + hp.gamma_n * ne + hp.gamma_o * off +
                                   hp.gamma_f * feat + hp.gamma_d * b.distillation)
                       .epsilon(1e-12));

  // zero weights kill the total regardless of predictions
  HyperParams zero = hp;
  zero.gamma_e = zero.gamma_n = zero.gamma_o = zero.gamma_f = zero.gamma_d = 0.0;
  CHECK(loss::total_loss(out, gt, zero).total == 0.0);

  // perfect predictions and identical activations -> 0
  loss::ModuleOutputs<double> perfect;
  auto pg = PredictionGrid<double>::zeros();
  pg.confidence(4, 4) = 1.0;
  pg.offset[0](4, 4) = 0.5;
  pg.offset[1](4, 4) = 0.5;
  perfect.grids = {pg, pg};
  perfect.activations = {a1, a1};
  CHECK(loss::total_loss(perfect, gt, hp).total == 0.0);
}

TEST_CASE("losses are nonnegative on random grids") {
  Rng rng(25);
  for (int trial = 0; trial < 10; ++trial) {
    const auto gt = testutil::random_gt(rng, rng.uniform_int(0, 4));
    const auto p = testutil::random_pred<double>(rng, gt);
    CHECK(loss::exist_loss(p, gt) >= 0.0);
    CHECK(loss::non_exist_loss(p, gt) >= 0.0);
    CHECK(loss::offset_loss(p, gt) >= 0.0);
    CHECK(loss::feature_loss(p, gt, 1.0) >= 0.0);
  }
}

TEST_CASE("shape mismatch raises") {
  auto gt = single_cell_gt(0, 0);
  PredictionGrid<double> p;
  p.confidence = Plane<double>::Zero(4, 4);
  for (auto& o : p.offset) o = Plane<double>::Zero(4, 4);
  for (auto& e : p.embedding) e = Plane<double>::Zero(4, 4);
  CHECK_THROWS_AS(loss::exist_loss(p, gt), ShapeError);
}

TEST_CASE("gradients match finite differences on random grids") {
  Rng rng(26);
  const double h = 1e-6;
  for (int trial = 0; trial < 3; ++trial) {
    const auto gt = testutil::random_gt(rng, 3);
    auto p = testutil::random_pred<double>(rng, gt);

    // confidence grads: exist + non_exist
    Plane<double> g_conf = Plane<double>::Zero(kGridRows, kGridCols);
    loss::exist_loss_grad(p, gt, g_conf, 1.0);
    loss::non_exist_loss_grad(p, gt, g_conf, 1.0);
    auto conf_loss = [&]() { return loss::exist_loss(p, gt) + loss::non_exist_loss(p, gt); };
    for (int k = 0; k < 40; ++k) {
      const int r = rng.uniform_int(0, kGridRows - 1), c = rng.uniform_int(0, kGridCols - 1);
      const double fd = testutil::fd_scalar(conf_loss, &p.confidence(r, c), h);
      CHECK(testutil::rel_err(g_conf(r, c), fd) < 1e-6);
    }

    // offset grads
    std::array<Plane<double>, 2> g_off = {Plane<double>::Zero(kGridRows, kGridCols),
                                          Plane<double>::Zero(kGridRows, kGridCols)};
    loss::offset_loss_grad(p, gt, g_off, 1.0);
    auto off_loss = [&]() { return loss::offset_loss(p, gt); };
    for (int k = 0; k < 20; ++k) {
      const int r = rng.uniform_int(0, kGridRows - 1), c = rng.uniform_int(0, kGridCols - 1);
      const int d = rng.uniform_int(0, 1);
      const double fd = testutil::fd_scalar(off_loss, &p.offset[d](r, c), h);
      CHECK(testutil::rel_err(g_off[d](r, c), fd) < 1e-6);
    }

    // embedding grads
    std::array<Plane<double>, kEmbeddingDim> g_emb;
    for (auto& g : g_emb) g = Plane<double>::Zero(kGridRows, kGridCols);
    loss::feature_loss_grad(p, gt, 1.0, g_emb, 1.0);
    auto feat_loss = [&]() { return loss::feature_loss(p, gt, 1.0); };
    int checked = 0;
    for (int r = 0; r < kGridRows && checked < 30; ++r) {
      for (int c = 0; c < kGridCols && checked < 30; ++c) {
        if (!gt.exist(r, c)) continue;
        const int d = rng.uniform_int(0, kEmbeddingDim - 1);
        const double fd = testutil::fd_scalar(feat_loss, &p.embedding[d](r, c), h);
        CHECK(testutil::rel_err(g_emb[d](r, c), fd) < 1e-5);
        ++checked;
      }
    }
  }
}

TEST_CASE("distillation gradients: flow-through matches FD, stop-teacher freezes the target") {
  Rng rng(27);
  std::vector<AttnMat<double>> acts;
  for (int m = 0; m < 3; ++m) {
    AttnMat<double> a(6, 8);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-1, 1);
    acts.push_back(std::move(a));
  }

  std::vector<AttnMat<double>> grads;
  for (const auto& a : acts) grads.push_back(AttnMat<double>::Zero(a.rows(), a.cols()));
  const double value = loss::distillation_loss_grad(acts, grads, 1.0, /*stop_teacher=*/false);
  CHECK(value == doctest::Approx(loss::distillation_loss(acts)).epsilon(1e-12));

  auto f = [&]() { return loss::distillation_loss(acts); };
  for (int m = 0; m < 3; ++m) {
    for (int k = 0; k < 12; ++k) {
      const Eigen::Index i = rng.uniform_int(0, static_cast<int>(acts[m].size()) - 1);
      const double fd = testutil::fd_scalar(f, acts[m].data() + i, 1e-6);
      CHECK(testutil::rel_err(grads[m].data()[i], fd) < 1e-5);
    }
  }

  // with the teacher frozen its grad is zero and student grads are unchanged
  std::vector<AttnMat<double>> frozen;
  for (const auto& a : acts) frozen.push_back(AttnMat<double>::Zero(a.rows(), a.cols()));
  loss::distillation_loss_grad(acts, frozen, 1.0, /*stop_teacher=*/true);
  CHECK(frozen[2].cwiseAbs().maxCoeff() == 0.0);
  CHECK((frozen[0] - grads[0]).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK((frozen[1] - grads[1]).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-15));
}

}  // TEST_SUITE
