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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "ecca/linalg.hpp"
#include "oracles.hpp"

namespace ecca {
namespace {

using namespace linalg;
using testing::random_feasible;

VectorXd unit(Index n, Index i) { return VectorXd::Unit(n, i); }

TEST(ProjectComplement, EmptyProjectorKeepsInput) {
  Rng rng(1);
  const MatrixXd m = rng.normal_matrix(5, 3);
  EXPECT_EQ(project_complement(MatrixXd(5, 0), m), m);
}

TEST(ProjectComplement, AbsorbsColumnSpace) {
  Rng rng(2);
  const MatrixXd u = rng.normal_matrix(6, 2);
  const MatrixXd m = u * rng.normal_matrix(2, 4);
  EXPECT_LE(project_complement(u, m).norm(), 1e-12 * m.norm());
}

TEST(ProjectComplement, CoordinateExample) {
  const MatrixXd r = project_complement(unit(3, 0), unit(3, 0) + unit(3, 1));
  EXPECT_LE((r - unit(3, 1)).norm(), 1e-15);
}

TEST(ProjectComplement, ResultOrthogonalAndRowCheck) {
  Rng rng(3);
  const MatrixXd u = rng.normal_matrix(9, 3);
  const MatrixXd r = project_complement(u, rng.normal_matrix(9, 4));
  EXPECT_LE((u.transpose() * r).norm(), 1e-10);
  EXPECT_THROW(project_complement(u, MatrixXd::Zero(8, 2)), Error);
}

TEST(Procrustes, OrthonormalInputIsFixedPoint) {
  Rng rng(4);
  const MatrixXd c = testing::random_orthonormal(rng, 7, 3);
  EXPECT_LE((constrained_procrustes(c, MatrixXd(7, 0)) - c).norm(), 1e-12);
}

TEST(Procrustes, DegenerateWhenAbsorbed) {
  Rng rng(5);
  const MatrixXd u = rng.normal_matrix(6, 2);
  try {
    constrained_procrustes(u * rng.normal_matrix(2, 2), u);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateInput);
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
}

TEST(Procrustes, BruteForceUnitCircle) {
  // Minimize ||p - (1,1,1)|| over unit p orthogonal to e1 by a fine grid.
  const VectorXd c = VectorXd::Ones(3);
  double best = 1e300;
  VectorXd arg;
  const int steps = 200000;
  for (int i = 0; i < steps; ++i) {
    const double phi = 2 * M_PI * i / steps;
    const VectorXd p = (VectorXd(3) << 0.0, std::cos(phi), std::sin(phi)).finished();
    if ((p - c).norm() < best) best = (p - c).norm(), arg = p;
  }
  const MatrixXd p = constrained_procrustes(c, unit(3, 0));
  EXPECT_LE((p.col(0) - arg).norm(), 1e-4);
  EXPECT_NEAR(p(1, 0), 1 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(p(2, 0), 1 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(p(0, 0), 0.0, 1e-15);
}

TEST(Procrustes, FeasibleOnRandomInstances) {
  Rng rng(6);
  for (int t = 0; t < 50; ++t) {
    const Index n = 8 + t % 5, q = t % 4, r = 1 + t % 3;
    const MatrixXd u = rng.normal_matrix(n, q);
    const MatrixXd p = constrained_procrustes(rng.normal_matrix(n, r), u);
    EXPECT_LE((u.transpose() * p).norm(), 1e-10);
    EXPECT_LE((p.transpose() * p - MatrixXd::Identity(r, r)).norm(), 1e-10);
  }
}

TEST(Procrustes, BeatsRandomFeasiblePoints) {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    const Index n = 3 + t % 4, r = 1 + t % 2, q = std::min<Index>(t % 3, n - r - 1);
    const MatrixXd u = rng.normal_matrix(n, q);
    const MatrixXd c = rng.normal_matrix(n, r);
    const double opt = (constrained_procrustes(c, u) - c).norm();
    for (int k = 0; k < 1000; ++k)
      EXPECT_LE(opt, (random_feasible(rng, u, r) - c).norm() + 1e-12);
  }
}

TEST(OrthonormalBasis, Identity) {
  const MatrixXd b = orthonormal_basis(MatrixXd::Identity(3, 3));
  ASSERT_EQ(b.cols(), 3);
  EXPECT_LE((b.transpose() * b - MatrixXd::Identity(3, 3)).norm(), 1e-14);
}

TEST(OrthonormalBasis, RankOneWithSignConvention) {
  VectorXd u(4), v(3);
  u << 1, -3, 2, 0.5;
  v << 2, 1, -1;
  const MatrixXd b = orthonormal_basis(u * v.transpose());
  ASSERT_EQ(b.cols(), 1);
  // Largest-magnitude entry (-3) is made positive.
  EXPECT_LE((b.col(0) + u / u.norm()).norm(), 1e-14);
}

TEST(OrthonormalBasis, ReconstructsAndZeroIsEmpty) {
  Rng rng(8);
  const MatrixXd m = rng.normal_matrix(10, 4);
  const MatrixXd b = orthonormal_basis(m);
  EXPECT_EQ(b.cols(), 4);
  EXPECT_LE((b * b.transpose() * m - m).norm(), 1e-8);
  EXPECT_EQ(orthonormal_basis(MatrixXd::Zero(5, 3)).cols(), 0);
}

TEST(Pinv, MatchesNormalEquations) {
  Rng rng(9);
  const MatrixXd a = rng.normal_matrix(8, 3);
  const MatrixXd ref = (a.transpose() * a).inverse() * a.transpose();
  EXPECT_LE((pinv(a) - ref).norm(), 1e-12);
}

TEST(CanonicalPairs, IdenticalSpaces) {
  Rng rng(10);
  const MatrixXd t = center_columns(rng.normal_matrix(12, 3));
  const CanonicalPairs cp = canonical_pairs(t, t * rng.normal_matrix(3, 3));
  ASSERT_EQ(cp.rho.size(), 3);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(cp.rho(i), 1.0, 1e-12);
}

TEST(CanonicalPairs, OrthogonalSpacesGiveNoPairs) {
  Rng rng(11);
  const MatrixXd q = testing::centered_orthonormal(rng, 10, 4);
  const CanonicalPairs cp = canonical_pairs(q.leftCols(2), q.rightCols(2));
  EXPECT_EQ(cp.rho.size(), 0);
}

TEST(CanonicalPairs, FortyFiveDegreeExample) {
  // Centered v, w in R^4 with cos angle = sqrt(2)/2.
  VectorXd v(4), w(4);
  v << 1, -1, 0, 0;
  w << 1, -1, 1, -1;
  ASSERT_NEAR(v.dot(w) / (v.norm() * w.norm()), std::sqrt(0.5), 1e-15);
  const CanonicalPairs cp = canonical_pairs(v, w);
  ASSERT_EQ(cp.rho.size(), 1);
  EXPECT_NEAR(cp.rho(0), 0.70711, 1e-5);
}

TEST(CanonicalPairs, MatchesPrincipalAngleDefinition) {
  Rng rng(12);
  for (int t = 0; t < 20; ++t) {
    const MatrixXd t1 = center_columns(rng.normal_matrix(15, 3));
    const MatrixXd t2 = center_columns(rng.normal_matrix(15, 4));
    const CanonicalPairs cp = canonical_pairs(t1, t2);
    // Direct definition: singular values of Q1^T Q2 for QR-based bases.
    Eigen::HouseholderQR<MatrixXd> q1(t1), q2(t2);
    const MatrixXd b1 = q1.householderQ() * MatrixXd::Identity(15, 3);
    const MatrixXd b2 = q2.householderQ() * MatrixXd::Identity(15, 4);
    const VectorXd s = (b1.transpose() * b2).jacobiSvd().singularValues();
    ASSERT_EQ(cp.rho.size(), 3);
    EXPECT_LE((cp.rho - s).norm(), 1e-8);
    EXPECT_LE((cp.u1.transpose() * cp.u2 - MatrixXd(cp.rho.asDiagonal())).norm(), 1e-10);
    EXPECT_LE((cp.u1.transpose() * cp.u1 - MatrixXd::Identity(3, 3)).norm(), 1e-10);
    EXPECT_LE(project_complement(t1, cp.u1).norm(), 1e-10);
    EXPECT_LE(project_complement(t2, cp.u2).norm(), 1e-10);
  }
}

TEST(CanonicalPairs, InputValidation) {
  Rng rng(13);
  const MatrixXd t = center_columns(rng.normal_matrix(6, 2));
  EXPECT_THROW(canonical_pairs(t, MatrixXd::Ones(6, 1)), Error);
  EXPECT_THROW(canonical_pairs(t, t, 1.0), Error);
  EXPECT_THROW(canonical_pairs(MatrixXd::Zero(1, 1), MatrixXd::Zero(1, 1)), Error);
  EXPECT_THROW(canonical_pairs(t, center_columns(rng.normal_matrix(5, 2))), Error);
}

TEST(PrincipalAngles, AscendingWithinRange) {
  Rng rng(14);
  const MatrixXd q1 = testing::random_orthonormal(rng, 9, 3);
  const MatrixXd q2 = testing::random_orthonormal(rng, 9, 4);
  const std::vector<double> a = principal_angles_deg(q1, q2);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_GE(a[i], 0.0);
    EXPECT_LE(a[i], 90.0);
    if (i > 0) EXPECT_LE(a[i - 1], a[i]);
  }
}

}  // namespace
}  // namespace ecca
