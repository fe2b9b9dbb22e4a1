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

#include <algorithm>
#include <array>
#include <string>

#include <Eigen/Dense>

#include "ecca/errors.hpp"
#include "ecca/expfam.hpp"
#include "ecca/linalg.hpp"

namespace ecca {

/// Two-view decomposition
///   Theta_k = 1 mu_k^T + U_k V_k^T + Z_k A_k^T,   k = 1, 2
/// with centered orthonormal correlated scores U_k (U_1^T U_2 = diag(lambda)),
/// and individual scores Z_k orthonormal, mutually orthogonal, and orthogonal
/// to 1, U_1, U_2. Views are indexed 0 and 1 in code.
struct EccaModel {
  std::array<VectorXd, 2> mu;
  std::array<MatrixXd, 2> u;  // n x r0
  std::array<MatrixXd, 2> v;  // p_k x r0
  std::array<MatrixXd, 2> z;  // n x (r_k - r0)
  std::array<MatrixXd, 2> a;  // p_k x (r_k - r0)
  VectorXd lambda;            // r0, descending
  std::array<ExpFamily, 2> fam{ExpFamily::gaussian(), ExpFamily::gaussian()};
  bool intercept = true;

  Index n() const { return u[0].rows(); }
  Index p(int k) const { return v[k].rows(); }
  Index r0() const { return u[0].cols(); }
  Index rank(int k) const { return u[k].cols() + z[k].cols(); }
  Index individual_rank(int k) const { return z[k].cols(); }

  /// Zero-parameter model of the given shape (all blocks zero).
  static EccaModel zeros(Index n, Index p1, Index p2, Index r0, Index r1,
                         Index r2, ExpFamily f1, ExpFamily f2) {
    EccaModel m;
    const std::array<Index, 2> p{p1, p2};
    const std::array<Index, 2> r{r1, r2};
    for (int k = 0; k < 2; ++k) {
      m.mu[k] = VectorXd::Zero(p[k]);
      m.u[k] = MatrixXd::Zero(n, r0);
      m.v[k] = MatrixXd::Zero(p[k], r0);
      m.z[k] = MatrixXd::Zero(n, r[k] - r0);
      m.a[k] = MatrixXd::Zero(p[k], r[k] - r0);
    }
    m.lambda = VectorXd::Zero(r0);
    m.fam = {f1, f2};
    return m;
  }

  /// Throws kInvalidInput when block shapes disagree.
  void check_shapes() const {
    const Index nn = n();
    const Index r = r0();
    for (int k = 0; k < 2; ++k) {
      const std::string view = "view " + std::to_string(k + 1);
      require(u[k].rows() == nn && z[k].rows() == nn, ErrorKind::kInvalidInput,
              view + ": score matrices must have n rows");
      require(u[k].cols() == r && v[k].cols() == r, ErrorKind::kInvalidInput,
              view + ": joint blocks must have r0 columns");
      require(v[k].rows() == mu[k].size() && a[k].rows() == mu[k].size(),
              ErrorKind::kInvalidInput,
              view + ": loadings and intercept must have p_k rows");
      require(z[k].cols() == a[k].cols(), ErrorKind::kInvalidInput,
              view + ": individual score/loading widths differ");
    }
    require(lambda.size() == r, ErrorKind::kInvalidInput,
            "lambda must have r0 entries");
  }

  /// (1_n  U_1  U_2) or (U_1  U_2) without intercept; Z must be orthogonal to it.
  MatrixXd joint_constraint() const {
    const MatrixXd ones = MatrixXd::Ones(n(), intercept ? 1 : 0);
    return linalg::hcat({&ones, &u[0], &u[1]}, n());
  }

  /// (1_n  Z_1  Z_2) or (Z_1  Z_2); U_k must be orthogonal to it.
  MatrixXd individual_constraint() const {
    const MatrixXd ones = MatrixXd::Ones(n(), intercept ? 1 : 0);
    return linalg::hcat({&ones, &z[0], &z[1]}, n());
  }
};

/// Natural parameter matrix of one view (k = 0 or 1).
inline MatrixXd assemble_theta(const EccaModel& m, int k) {
  require(k == 0 || k == 1, ErrorKind::kInvalidInput,
          "assemble_theta: view must be 0 or 1");
  m.check_shapes();
  MatrixXd theta = MatrixXd::Zero(m.n(), m.p(k));
  theta.rowwise() += m.mu[k].transpose();
  if (m.r0() > 0) theta.noalias() += m.u[k] * m.v[k].transpose();
  if (m.z[k].cols() > 0) theta.noalias() += m.z[k] * m.a[k].transpose();
  return theta;
}

inline double model_nll(const EccaModel& m, const MatrixXd& x1,
                        const MatrixXd& x2) {
  return nll(m.fam[0], x1, assemble_theta(m, 0)) +
         nll(m.fam[1], x2, assemble_theta(m, 1));
}

/// Frobenius norms of each constraint violation.
struct ConstraintResiduals {
  std::array<double, 2> u_center{0, 0};   // ||U_k^T 1||
  std::array<double, 2> u_orth{0, 0};     // ||U_k^T U_k - I||
  double u_cross_offdiag = 0;             // off-diagonal part of U_1^T U_2
  std::array<double, 2> z_center_u{0, 0}; // ||Z_k^T (1 U_1 U_2)||
  std::array<double, 2> z_orth{0, 0};     // ||Z_k^T Z_k - I||
  double z_cross = 0;                     // ||Z_1^T Z_2||

  double max() const {
    double out = std::max(u_cross_offdiag, z_cross);
    for (int k = 0; k < 2; ++k)
      out = std::max({out, u_center[k], u_orth[k], z_center_u[k], z_orth[k]});
    return out;
  }
};

inline ConstraintResiduals constraint_residuals(const EccaModel& m) {
  ConstraintResiduals r;
  const Index n = m.n();
  const MatrixXd ones = MatrixXd::Ones(n, 1);
  const MatrixXd outer = m.joint_constraint();
  for (int k = 0; k < 2; ++k) {
    const MatrixXd& u = m.u[k];
    const MatrixXd& z = m.z[k];
    if (m.intercept && u.cols() > 0) r.u_center[k] = (u.transpose() * ones).norm();
    if (u.cols() > 0)
      r.u_orth[k] = (u.transpose() * u - MatrixXd::Identity(u.cols(), u.cols())).norm();
    if (z.cols() > 0) {
      if (outer.cols() > 0) r.z_center_u[k] = (z.transpose() * outer).norm();
      r.z_orth[k] = (z.transpose() * z - MatrixXd::Identity(z.cols(), z.cols())).norm();
    }
  }
  if (m.r0() > 0) {
    MatrixXd cross = m.u[0].transpose() * m.u[1];
    cross.diagonal().setZero();
    r.u_cross_offdiag = cross.norm();
  }
  if (m.z[0].cols() > 0 && m.z[1].cols() > 0)
    r.z_cross = (m.z[0].transpose() * m.z[1]).norm();
  return r;
}

}  // namespace ecca
