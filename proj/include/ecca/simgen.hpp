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
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "ecca/errors.hpp"
#include "ecca/expfam.hpp"
#include "ecca/linalg.hpp"
#include "ecca/model.hpp"
#include "ecca/random.hpp"

namespace ecca {

struct SimScenario {
  Index n = 50;
  Index p1 = 30;
  Index p2 = 20;
  Index r0 = 3;
  Index r1 = 7;
  Index r2 = 6;
  VectorXd lambda = (VectorXd(3) << 1.0, 0.9, 0.7).finished();
  ExpFamily fam1 = ExpFamily::gaussian();
  ExpFamily fam2 = ExpFamily::gaussian();
  double snr = 5.0;
  int trials = 100;
  std::uint64_t seed = 1;
  bool noiseless = false;  // X = Theta (Gaussian) or X = b'(Theta) (Binomial)

  /// Simulation settings 1 (Gaussian/Gaussian), 2 (Gaussian/Binomial) and
  /// 3 (Binomial/Binomial) at n = 50, p = (30, 20), r = (3, 7, 6).
  static SimScenario setting(int k, std::uint64_t seed) {
    require(k >= 1 && k <= 3, ErrorKind::kInvalidInput, "setting must be 1, 2 or 3");
    SimScenario s;
    s.seed = seed;
    s.fam1 = k == 3 ? ExpFamily::binomial(s.trials) : ExpFamily::gaussian();
    s.fam2 = k == 1 ? ExpFamily::gaussian() : ExpFamily::binomial(s.trials);
    return s;
  }

  void validate() const {
    require(r0 >= 0 && r0 <= std::min(r1, r2), ErrorKind::kInvalidInput,
            "scenario: need 0 <= r0 <= min(r1, r2)");
    require(r1 <= std::min(n - 1, p1) && r2 <= std::min(n - 1, p2),
            ErrorKind::kInfeasible, "scenario: r_k must not exceed min(n - 1, p_k)");
    require(2 * r0 <= n - 1, ErrorKind::kInfeasible, "scenario: need 2 r0 <= n - 1");
    require(1 + r1 + r2 <= n, ErrorKind::kInfeasible, "scenario: need 1 + r1 + r2 <= n");
    require(lambda.size() == r0, ErrorKind::kInvalidInput,
            "scenario: lambda must have r0 entries");
    for (Index i = 0; i < r0; ++i) {
      require(lambda(i) > 0.0 && lambda(i) <= 1.0, ErrorKind::kInvalidInput,
              "scenario: lambda entries must lie in (0, 1]");
      require(i == 0 || lambda(i) <= lambda(i - 1), ErrorKind::kInvalidInput,
              "scenario: lambda must be descending");
    }
    require(snr > 0.0, ErrorKind::kInvalidInput, "scenario: snr must be > 0");
    require(trials >= 1, ErrorKind::kInvalidInput, "scenario: trials must be >= 1");
  }
};

struct SimTruth {
  EccaModel model;
  MatrixXd theta1, theta2;
  MatrixXd x1, x2;
};

namespace detail {

inline MatrixXd leading_left_vectors(const MatrixXd& m, Index k, const char* what) {
  if (k == 0) return MatrixXd(m.rows(), 0);
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU);
  const VectorXd& s = svd.singularValues();
  require(s.size() >= k && s(k - 1) > 1e-8 * s(0), ErrorKind::kDegenerateInput,
          std::string(what) + ": random draw is rank deficient");
  return svd.matrixU().leftCols(k);
}

// Affine map of the singular values of m into (lo, hi), keeping its
// singular vectors.
inline MatrixXd place_singular_values(const MatrixXd& m, double lo, double hi) {
  if (m.cols() == 0) return m;
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd s = svd.singularValues();
  const double smax = s.maxCoeff(), smin = s.minCoeff();
  const double a = lo + 0.01 * (hi - lo), b = hi - 0.01 * (hi - lo);
  VectorXd t(s.size());
  for (Index i = 0; i < s.size(); ++i)
    t(i) = smax > smin ? a + (b - a) * (s(i) - smin) / (smax - smin) : 0.5 * (a + b);
  return svd.matrixU() * t.asDiagonal() * svd.matrixV().transpose();
}

inline MatrixXd two_sided_matrix(Rng& rng, Index rows, Index cols, double lo, double hi) {
  MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.two_sided(lo, hi);
  return m;
}

enum StreamTag : std::uint64_t { kJointStream = 1, kIndividualStream, kLoadingStream, kNoiseStream };

}  // namespace detail

/// Correlated scores with U_k^T 1 = 0, U_k^T U_k = I, U_1^T U_2 = diag(lambda):
/// W = U0 sqrt(Sigma) R^T where (I L; L I) = R Sigma R^T and U0 holds the
/// leading 2 r0 left singular vectors of a centered Gaussian matrix.
inline std::pair<MatrixXd, MatrixXd> gen_joint_scores(Index n, const VectorXd& lambda,
                                                      Rng& rng) {
  const Index r0 = lambda.size();
  if (r0 == 0) return {MatrixXd(n, 0), MatrixXd(n, 0)};
  require(2 * r0 <= n - 1, ErrorKind::kInfeasible, "gen_joint_scores: need 2 r0 <= n - 1");
  MatrixXd c = MatrixXd::Identity(2 * r0, 2 * r0);
  c.topRightCorner(r0, r0) = lambda.asDiagonal();
  c.bottomLeftCorner(r0, r0) = lambda.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(c);
  const VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  MatrixXd u0;
  for (int attempt = 0;; ++attempt) {
    try {
      u0 = detail::leading_left_vectors(linalg::center_columns(rng.normal_matrix(n, 2 * r0)),
                                        2 * r0, "gen_joint_scores");
      break;
    } catch (const Error&) {
      if (attempt == 1) throw;
    }
  }
  const MatrixXd w = u0 * root.asDiagonal() * eig.eigenvectors().transpose();
  return {w.leftCols(r0), w.rightCols(r0)};
}

/// Individual scores: leading left singular vectors of a Gaussian draw
/// projected off (1, U_1, U_2), split into Z_1 (q1 columns) and Z_2 (q2).
inline std::pair<MatrixXd, MatrixXd> gen_individual_scores(Index n, const MatrixXd& u1,
                                                           const MatrixXd& u2, Index q1,
                                                           Index q2, Rng& rng) {
  require(q1 >= 0 && q2 >= 0, ErrorKind::kInvalidInput,
          "gen_individual_scores: widths must be >= 0");
  if (q1 + q2 == 0) return {MatrixXd(n, 0), MatrixXd(n, 0)};
  require(1 + u1.cols() + u2.cols() + q1 + q2 <= n, ErrorKind::kInfeasible,
          "gen_individual_scores: 1 + 2 r0 + (r1 - r0) + (r2 - r0) exceeds n");
  const MatrixXd ones = MatrixXd::Ones(n, 1);
  const MatrixXd outer = linalg::hcat({&ones, &u1, &u2}, n);
  const MatrixXd p = detail::leading_left_vectors(
      linalg::project_complement(outer, rng.normal_matrix(n, q1 + q2)), q1 + q2,
      "gen_individual_scores");
  return {p.leftCols(q1), p.rightCols(q2)};
}

/// Intercepts, loadings and natural parameters for both views. Gaussian
/// views have singular values of U_1 V_1^T, U_2 V_2^T in (22, 26.4), of
/// Z_1 A_1^T in (15, 18) and of Z_2 A_2^T in (18, 21.6). Binomial views use
/// the same construction multiplied by m, then shrunk until at least 99% of
/// the expected proportions lie in [0.01, 0.99].
inline void gen_loadings_and_theta(EccaModel& m, Rng& rng) {
  constexpr std::array<std::array<double, 2>, 2> kIndividual{{{15.0, 18.0}, {18.0, 21.6}}};
  for (int k = 0; k < 2; ++k) {
    const Index p = m.p(k);
    m.mu[k] = detail::two_sided_matrix(rng, p, 1, 0.5, 1.0);
    m.v[k] = detail::place_singular_values(
        detail::two_sided_matrix(rng, p, m.r0(), 1.0, 2.0), 22.0, 26.4);
    m.a[k] = detail::place_singular_values(
        detail::two_sided_matrix(rng, p, m.individual_rank(k), 1.0, 2.0),
        kIndividual[k][0], kIndividual[k][1]);
    if (!m.fam[k].is_binomial()) continue;
    const double trials = m.fam[k].trials;
    m.mu[k] *= trials;
    m.v[k] *= trials;
    m.a[k] *= trials;
    for (int shrink = 0;; ++shrink) {
      const MatrixXd pr = mean_of(m.fam[k], assemble_theta(m, k));
      const double outside =
          ((pr.array() < 0.01) || (pr.array() > 0.99)).cast<double>().mean();
      if (outside <= 0.01) break;
      require(shrink < 200, ErrorKind::kInfeasible,
              "gen_loadings_and_theta: cannot bring proportions into [0.01, 0.99]");
      m.mu[k] *= 0.9;
      m.v[k] *= 0.9;
      m.a[k] *= 0.9;
    }
  }
}

/// Gaussian: X = Theta + sigma E with sigma^2 = ||Theta||^2 / (n p snr).
/// Binomial: X = Binomial(m, b'(Theta)) / m.
inline MatrixXd gen_view_observations(const ExpFamily& fam, const MatrixXd& theta,
                                      double snr, bool noiseless, Rng& rng) {
  if (fam.is_gaussian()) {
    if (noiseless) return theta;
    const double sigma2 = theta.squaredNorm() / (static_cast<double>(theta.size()) * snr);
    return theta + std::sqrt(sigma2) * rng.normal_matrix(theta.rows(), theta.cols());
  }
  const MatrixXd p = mean_of(fam, theta);
  if (noiseless) return p;
  MatrixXd x(theta.rows(), theta.cols());
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i)
      x(i, j) = static_cast<double>(rng.binomial(fam.trials, p(i, j))) / fam.trials;
  return x;
}

inline std::pair<MatrixXd, MatrixXd> gen_observations(const SimScenario& scn,
                                                      const MatrixXd& theta1,
                                                      const MatrixXd& theta2, Rng& rng) {
  MatrixXd x1 = gen_view_observations(scn.fam1, theta1, scn.snr, scn.noiseless, rng);
  MatrixXd x2 = gen_view_observations(scn.fam2, theta2, scn.snr, scn.noiseless, rng);
  return {std::move(x1), std::move(x2)};
}

/// Full draw; each stage uses its own stream derived from scn.seed, so the
/// truth does not depend on the noise setting.
inline SimTruth simulate(const SimScenario& scn) {
  scn.validate();
  SimTruth out;
  EccaModel& m = out.model;
  m = EccaModel::zeros(scn.n, scn.p1, scn.p2, scn.r0, scn.r1, scn.r2, scn.fam1, scn.fam2);
  Rng joint_rng(mix_seed(scn.seed, detail::kJointStream));
  Rng indiv_rng(mix_seed(scn.seed, detail::kIndividualStream));
  Rng load_rng(mix_seed(scn.seed, detail::kLoadingStream));
  Rng noise_rng(mix_seed(scn.seed, detail::kNoiseStream));

  auto [u1, u2] = gen_joint_scores(scn.n, scn.lambda, joint_rng);
  m.u = {std::move(u1), std::move(u2)};
  m.lambda = scn.lambda;
  auto [z1, z2] = gen_individual_scores(scn.n, m.u[0], m.u[1], scn.r1 - scn.r0,
                                        scn.r2 - scn.r0, indiv_rng);
  m.z = {std::move(z1), std::move(z2)};
  gen_loadings_and_theta(m, load_rng);
  out.theta1 = assemble_theta(m, 0);
  out.theta2 = assemble_theta(m, 1);
  auto [x1, x2] = gen_observations(scn, out.theta1, out.theta2, noise_rng);
  out.x1 = std::move(x1);
  out.x2 = std::move(x2);
  return out;
}

}  // namespace ecca
