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

#include <Eigen/Dense>

#include "keylane/common.hpp"

namespace keylane::post {

// Natural cubic smoothing spline, Reinsch form: minimizes
//   sum_i (z_i - f(t_i))^2 + lambda * integral f''(t)^2 dt
// over natural cubic splines with knots at t, and returns the fitted values at
// the knots. lambda <= 0 degenerates to interpolation (f == z at the knots).
// t must be strictly increasing.
inline Eigen::VectorXd smoothing_spline_fit(const Eigen::VectorXd& t, const Eigen::VectorXd& z,
                                            double lambda) {
  const Eigen::Index n = t.size();
  if (z.size() != n) throw ShapeError("smoothing_spline_fit: t/z size mismatch");
  if (n < 3 || lambda <= 0.0) return z;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (!(t[i + 1] > t[i])) throw Error("smoothing_spline_fit: knots must be increasing");
  }

  // Q: n x (n-2) second-difference operator, R: (n-2) x (n-2) Gram matrix of
  // the natural-spline second derivatives (Green & Silverman parametrization).
  const Eigen::Index m = n - 2;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, m);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double h0 = t[j + 1] - t[j];
    const double h1 = t[j + 2] - t[j + 1];
    q(j, j) = 1.0 / h0;
    q(j + 1, j) = -1.0 / h0 - 1.0 / h1;
    q(j + 2, j) = 1.0 / h1;
    r(j, j) = (h0 + h1) / 3.0;
    if (j + 1 < m) {
      r(j, j + 1) = h1 / 6.0;
      r(j + 1, j) = h1 / 6.0;
    }
  }

  // (R + lambda Q^T Q) gamma = Q^T z ; fitted = z - lambda Q gamma
  Eigen::MatrixXd lhs = r + lambda * (q.transpose() * q);
  Eigen::VectorXd gamma = lhs.ldlt().solve(q.transpose() * z);
  return z - lambda * (q * gamma);
}

}  // namespace keylane::post
