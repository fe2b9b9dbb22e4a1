/*
 * Copyright 2026 The ecca-cpp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "ecca/errors.hpp"
#include "ecca/linalg.hpp"
#include "ecca/model.hpp"

namespace ecca {

/// ||theta_hat - theta||_F^2 / ||theta||_F^2.
inline double relative_error(const MatrixXd& theta_hat, const MatrixXd& theta) {
  require(theta_hat.rows() == theta.rows() && theta_hat.cols() == theta.cols(),
          ErrorKind::kInvalidInput, "relative_error: shapes differ");
  const double denom = theta.squaredNorm();
  require(denom > 0.0, ErrorKind::kInvalidInput, "relative_error: truth has zero norm");
  return (theta_hat - theta).squaredNorm() / denom;
}

/// (1 / sqrt 2) ||P_J - P_Jhat||_F with projectors built from SVD bases.
inline double chordal_distance(const MatrixXd& j, const MatrixXd& j_hat) {
  require(j.rows() == j_hat.rows(), ErrorKind::kInvalidInput,
          "chordal_distance: row counts differ");
  const MatrixXd q1 = linalg::orthonormal_basis(j);
  const MatrixXd q2 = linalg::orthonormal_basis(j_hat);
  require(q1.cols() > 0 && q2.cols() > 0, ErrorKind::kInvalidInput,
          "chordal_distance: zero matrix input");
  const MatrixXd diff = q1 * q1.transpose() - q2 * q2.transpose();
  return diff.norm() / std::sqrt(2.0);
}

struct EvalReport {
  int setting = 0;
  int rep = 0;
  std::array<double, 2> relative_error{0, 0};
  std::array<double, 2> chordal_distance{0, 0};
};

/// Compares a fitted model against the truth: relative error of Theta_k and
/// chordal distance between the joint signals U_k V_k^T (NaN when either
/// joint block is empty).
inline EvalReport evaluate(const EccaModel& fitted, const EccaModel& truth, int setting = 0,
                           int rep = 0) {
  EvalReport r;
  r.setting = setting;
  r.rep = rep;
  for (int k = 0; k < 2; ++k) {
    r.relative_error[k] = relative_error(assemble_theta(fitted, k), assemble_theta(truth, k));
    if (fitted.r0() == 0 || truth.r0() == 0) {
      r.chordal_distance[k] = std::nan("");
      continue;
    }
    r.chordal_distance[k] = chordal_distance(truth.u[k] * truth.v[k].transpose(),
                                             fitted.u[k] * fitted.v[k].transpose());
  }
  return r;
}

}  // namespace ecca
