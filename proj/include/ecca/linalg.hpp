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
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ecca/errors.hpp"

namespace ecca {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace linalg {

inline constexpr double kPinvTol = 1e-12;
inline constexpr double kProcrustesTol = 1e-12;
inline constexpr double kBasisTol = 1e-10;
inline constexpr double kCorrelationCutoff = 1e-8;

inline MatrixXd center_columns(const MatrixXd& m) {
  if (m.rows() == 0) return m;
  return m.rowwise() - m.colwise().mean();
}

inline MatrixXd hcat(const std::vector<const MatrixXd*>& blocks, Index rows) {
  Index cols = 0;
  for (const auto* b : blocks) cols += b->cols();
  MatrixXd out(rows, cols);
  Index at = 0;
  for (const auto* b : blocks) {
    require(b->rows() == rows || b->cols() == 0, ErrorKind::kInvalidInput,
            "hcat: row count mismatch");
    if (b->cols() == 0) continue;
    out.middleCols(at, b->cols()) = *b;
    at += b->cols();
  }
  return out;
}

// Flip each column so its largest-magnitude entry is positive.
inline void fix_column_signs(MatrixXd& q) {
  for (Index j = 0; j < q.cols(); ++j) {
    Index arg = 0;
    q.col(j).cwiseAbs().maxCoeff(&arg);
    if (q(arg, j) < 0) q.col(j) *= -1.0;
  }
}

/// Left singular vectors of M whose singular value exceeds
/// rank_tol * sigma_max, with a deterministic sign per column.
inline MatrixXd orthonormal_basis(const MatrixXd& m, double rank_tol = kBasisTol) {
  if (m.cols() == 0 || m.rows() == 0) return MatrixXd(m.rows(), 0);
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU);
  const VectorXd& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0.0) return MatrixXd(m.rows(), 0);
  Index rank = 0;
  while (rank < s.size() && s(rank) > rank_tol * s(0)) ++rank;
  MatrixXd q = svd.matrixU().leftCols(rank);
  fix_column_signs(q);
  return q;
}

/// Moore-Penrose inverse with singular values below tol * sigma_max dropped.
inline MatrixXd pinv(const MatrixXd& a, double tol = kPinvTol) {
  if (a.size() == 0) return MatrixXd::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  VectorXd inv = VectorXd::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * s(0)) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// (I - U U^+) M.
inline MatrixXd project_complement(const MatrixXd& u, const MatrixXd& m) {
  require(u.rows() == m.rows() || u.cols() == 0, ErrorKind::kInvalidInput,
          "project_complement: U has " + std::to_string(u.rows()) +
              " rows, M has " + std::to_string(m.rows()));
  if (u.cols() == 0 || m.cols() == 0) return m;
  const MatrixXd q = orthonormal_basis(u, kPinvTol);
  return m - q * (q.transpose() * m);
}

/// Nearest matrix to C with orthonormal columns orthogonal to C(U):
/// P = M N^T from the thin SVD (I - U U^+) C = M D N^T.
inline MatrixXd constrained_procrustes(const MatrixXd& c, const MatrixXd& u) {
  const Index r = c.cols();
  if (r == 0) return MatrixXd(c.rows(), 0);
  require(r <= c.rows(), ErrorKind::kDegenerateInput,
          "constrained_procrustes: target rank exceeds row count");
  const MatrixXd projected = project_complement(u, c);
  Eigen::JacobiSVD<MatrixXd> svd(projected,
                                 Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  const double floor = kProcrustesTol * std::max(s(0), c.norm());
  Index deficient = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (!(s(i) > floor)) ++deficient;
  if (deficient > 0) {
    throw Error(ErrorKind::kDegenerateInput,
                "constrained_procrustes: projected target is rank deficient (" +
                    std::to_string(deficient) + " of " + std::to_string(r) +
                    " singular values below tolerance)");
  }
  return svd.matrixU() * svd.matrixV().transpose();
}

/// Canonical (principal) vector pairs between two column spaces.
struct CanonicalPairs {
  MatrixXd u1;
  MatrixXd u2;
  VectorXd rho;  // descending
};

/// All min(k1, k2) principal vector pairs between C(Q1) and C(Q2) for
/// orthonormal bases Q1, Q2; no cutoff applied.
inline CanonicalPairs principal_pairs(const MatrixXd& q1, const MatrixXd& q2) {
  const Index k = std::min(q1.cols(), q2.cols());
  CanonicalPairs out{MatrixXd(q1.rows(), k), MatrixXd(q2.rows(), k), VectorXd(k)};
  if (k == 0) return out;
  const MatrixXd cross = q1.transpose() * q2;
  Eigen::JacobiSVD<MatrixXd> svd(cross, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.u1 = q1 * svd.matrixU().leftCols(k);
  out.u2 = q2 * svd.matrixV().leftCols(k);
  out.rho = svd.singularValues().head(k).cwiseMin(1.0);
  for (Index j = 0; j < k; ++j) {
    Index arg = 0;
    out.u1.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.u1(arg, j) < 0) {
      out.u1.col(j) *= -1.0;
      out.u2.col(j) *= -1.0;
    }
  }
  return out;
}

inline void require_centered(const MatrixXd& t, const std::string& where) {
  if (t.cols() == 0) return;
  const double scale = std::max(1.0, t.cwiseAbs().maxCoeff());
  require(t.colwise().mean().norm() <= 1e-8 * scale, ErrorKind::kInvalidInput,
          where + ": input columns are not centered");
}

/// Canonical variable pairs between column-centered T1 and T2, keeping only
/// pairs with correlation above the cutoff.
inline CanonicalPairs canonical_pairs(const MatrixXd& t1, const MatrixXd& t2,
                                      double cutoff = kCorrelationCutoff) {
  require(t1.rows() == t2.rows(), ErrorKind::kInvalidInput,
          "canonical_pairs: T1 and T2 have different row counts");
  require(t1.rows() >= 2, ErrorKind::kInvalidInput,
          "canonical_pairs: need at least 2 rows");
  require(cutoff >= 0.0 && cutoff < 1.0, ErrorKind::kInvalidInput,
          "canonical_pairs: cutoff must lie in [0, 1)");
  require_centered(t1, "canonical_pairs(T1)");
  require_centered(t2, "canonical_pairs(T2)");
  CanonicalPairs all = principal_pairs(orthonormal_basis(t1), orthonormal_basis(t2));
  Index keep = 0;
  while (keep < all.rho.size() && all.rho(keep) > cutoff) ++keep;
  return {all.u1.leftCols(keep), all.u2.leftCols(keep), all.rho.head(keep)};
}

/// Principal angles in degrees between C(Q1) and C(Q2) (orthonormal
/// bases), ascending, clamped to [0, 90].
inline std::vector<double> principal_angles_deg(const MatrixXd& q1,
                                                const MatrixXd& q2) {
  const Index k = std::min(q1.cols(), q2.cols());
  std::vector<double> out;
  if (k == 0) return out;
  const VectorXd s = (q1.transpose() * q2).jacobiSvd().singularValues();
  constexpr double kDeg = 180.0 / 3.14159265358979323846;
  for (Index i = 0; i < k; ++i)
    out.push_back(std::acos(std::clamp(s(i), 0.0, 1.0)) * kDeg);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace linalg
}  // namespace ecca
