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
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ecca/errors.hpp"
#include "ecca/expfam.hpp"
#include "ecca/linalg.hpp"
#include "ecca/newton.hpp"
#include "ecca/random.hpp"

namespace ecca {

using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct EpcaOptions {
  double rel_tol = 1e-6;
  int max_sweeps = 200;
  NewtonOptions newton;
};

struct EpcaResult {
  MatrixXd theta;       // 1 mu^T + S W^T
  double nll_observed = 0.0;
  int sweeps = 0;
  bool converged = false;
};

namespace detail {

// Rows whose observed entries sit at the boundary of the Binomial support
// have no finite minimizer; the line search then stalls after the objective
// has stopped moving. The last accepted iterate is kept for those rows.
inline VectorXd solve_keep_stalled(const RowProblem& prob, const VectorXd& t0,
                                   const NewtonOptions& opts) {
  try {
    return newton_solve_row(prob, t0, opts).t;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kStalledStep || !e.last_iterate()) throw;
    return *e.last_iterate();
  }
}

inline MatrixXd truncated_svd(const MatrixXd& m, Index r) {
  if (r == 0) return MatrixXd::Zero(m.rows(), m.cols());
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
         svd.matrixV().leftCols(r).transpose();
}

inline double masked_saturated_nll(const ExpFamily& fam, const MatrixXd& x, const Mask& mask) {
  double s = 0.0;
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i)
      if (mask(i, j)) s += saturated_nll_term(fam, x(i, j));
  return s;
}

inline VectorXd mask_weights(const Mask& mask, Index index, bool by_column) {
  if (by_column) return mask.col(index).cast<double>();
  return mask.row(index).transpose().cast<double>();
}

}  // namespace detail

/// Rank-r exponential PCA with intercept on the observed entries (mask true):
/// Theta = 1 mu^T + S W^T with centered S, by alternating per-column and
/// per-row Newton solves. Stops when the observed deviance changes by at
/// most rel_tol relatively, or after max_sweeps. Gaussian data with a full
/// mask use the truncated SVD directly.
inline EpcaResult epca_low_rank(const MatrixXd& x, const ExpFamily& fam, Index r,
                                const Mask* mask_in = nullptr, const EpcaOptions& opts = {}) {
  const Index n = x.rows(), p = x.cols();
  require(r >= 0 && r <= std::min(n - 1, p), ErrorKind::kInfeasible,
          "epca_low_rank: rank must lie in [0, min(n - 1, p)]");
  check_data(fam, x, "epca_low_rank");
  const Mask mask = mask_in ? *mask_in : Mask::Constant(n, p, true);
  require(mask.rows() == n && mask.cols() == p, ErrorKind::kInvalidInput,
          "epca_low_rank: mask shape differs from X");
  for (Index i = 0; i < n; ++i)
    require(mask.row(i).any(), ErrorKind::kInvalidInput,
            "epca_low_rank: row " + std::to_string(i) + " has no observed entry");
  for (Index j = 0; j < p; ++j)
    require(mask.col(j).any(), ErrorKind::kInvalidInput,
            "epca_low_rank: column " + std::to_string(j) + " has no observed entry");

  EpcaResult res;
  const MatrixXd sat = saturated_theta(fam, x);
  VectorXd mu(p);
  MatrixXd filled = sat;
  for (Index j = 0; j < p; ++j) {
    double s = 0.0;
    Index c = 0;
    for (Index i = 0; i < n; ++i)
      if (mask(i, j)) s += sat(i, j), ++c;
    mu(j) = s / static_cast<double>(c);
    for (Index i = 0; i < n; ++i)
      if (!mask(i, j)) filled(i, j) = mu(j);
  }
  MatrixXd centered = filled.rowwise() - mu.transpose();

  if (fam.is_gaussian() && mask.all()) {
    res.theta = detail::truncated_svd(centered, r);
    res.theta.rowwise() += mu.transpose();
    res.nll_observed = nll(fam, x, res.theta);
    res.converged = true;
    return res;
  }

  MatrixXd s(n, r), w(p, r);
  if (r > 0) {
    Eigen::JacobiSVD<MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    s = svd.matrixU().leftCols(r);
    w = svd.matrixV().leftCols(r) * svd.singularValues().head(r).asDiagonal();
  }
  const auto assemble = [&] {
    MatrixXd t = s * w.transpose();
    t.rowwise() += mu.transpose();
    return t;
  };
  const double sat_nll = detail::masked_saturated_nll(fam, x, mask);
  double dev = masked_nll(fam, x, assemble(), mask) - sat_nll;

  const MatrixXd ones = MatrixXd::Ones(n, 1);
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    const MatrixXd design = linalg::hcat({&ones, &s}, n);
    for (Index j = 0; j < p; ++j) {
      RowProblem prob{design, x.col(j), fam};
      prob.weights = detail::mask_weights(mask, j, true);
      VectorXd t0(1 + r);
      t0 << mu(j), w.row(j).transpose();
      try {
        const VectorXd t = detail::solve_keep_stalled(prob, t0, opts.newton);
        mu(j) = t(0);
        w.row(j) = t.tail(r).transpose();
      } catch (const Error& e) {
        throw e.with_context("epca column " + std::to_string(j));
      }
    }
    if (r > 0) {
      for (Index i = 0; i < n; ++i) {
        RowProblem prob{w, x.row(i).transpose(), fam};
        prob.offset = mu;
        prob.weights = detail::mask_weights(mask, i, false);
        try {
          s.row(i) = detail::solve_keep_stalled(prob, s.row(i).transpose(), opts.newton).transpose();
        } catch (const Error& e) {
          throw e.with_context("epca row " + std::to_string(i));
        }
      }
      // Re-center and re-orthonormalize the scores; Theta is unchanged.
      const VectorXd mean = s.colwise().mean().transpose();
      s.rowwise() -= mean.transpose();
      mu += w * mean;
      Eigen::HouseholderQR<MatrixXd> qr(s);
      const MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, r);
      const MatrixXd rr = q.transpose() * s;
      s = q;
      w = w * rr.transpose();
    }
    const double next = masked_nll(fam, x, assemble(), mask) - sat_nll;
    res.sweeps = sweep;
    const double change = std::abs(dev - next);
    dev = next;
    if (change <= opts.rel_tol * std::max(std::abs(next), 1e-12)) {
      res.converged = true;
      break;
    }
  }
  res.theta = assemble();
  res.nll_observed = masked_nll(fam, x, res.theta, mask);
  return res;
}

struct RankCurvePoint {
  Index rank = 0;
  double heldout_nll = 0.0;  // mean over folds
};

struct TotalRankResult {
  Index rank = 0;
  std::vector<RankCurvePoint> curve;
};

/// Element-wise K-fold assignment: a seeded random permutation of the
/// entries, dealt round-robin into folds.
inline Eigen::MatrixXi element_folds(Index n, Index p, int folds, std::uint64_t seed) {
  std::vector<Index> order(static_cast<std::size_t>(n * p));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }
  Eigen::MatrixXi f(n, p);
  for (std::size_t k = 0; k < order.size(); ++k)
    f(order[k] % n, order[k] / n) = static_cast<int>(k % static_cast<std::size_t>(folds));
  return f;
}

/// Chooses the rank with the smallest mean held-out nll; values within
/// 1e-9 relative of the minimum count as ties and go to the smaller rank.
inline TotalRankResult estimate_total_rank(const MatrixXd& x, const ExpFamily& fam,
                                           const std::vector<Index>& grid, int folds = 10,
                                           std::uint64_t seed = 1,
                                           const EpcaOptions& opts = {}) {
  require(!grid.empty(), ErrorKind::kInvalidInput, "estimate_total_rank: empty rank grid");
  require(folds >= 2, ErrorKind::kInvalidInput, "estimate_total_rank: need at least 2 folds");
  const Eigen::MatrixXi fold = element_folds(x.rows(), x.cols(), folds, seed);
  TotalRankResult res;
  for (Index r : grid) {
    double total = 0.0;
    for (int f = 0; f < folds; ++f) {
      const Mask train = (fold.array() != f).matrix();
      const Mask test = (fold.array() == f).matrix();
      EpcaResult fit;
      try {
        fit = epca_low_rank(x, fam, r, &train, opts);
      } catch (const Error& e) {
        throw e.with_context("rank " + std::to_string(r) + ", fold " + std::to_string(f));
      }
      total += masked_nll(fam, x, fit.theta, test);
    }
    res.curve.push_back({r, total / folds});
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& pt : res.curve) best = std::min(best, pt.heldout_nll);
  const double slack = 1e-9 * std::max(1.0, std::abs(best));
  res.rank = std::numeric_limits<Index>::max();
  for (const auto& pt : res.curve)
    if (pt.heldout_nll <= best + slack) res.rank = std::min(res.rank, pt.rank);
  return res;
}

struct AngleSplit {
  Index r0 = 0;
  Index split_index = 0;  // size of the small-angle cluster in the padded list
  std::vector<double> padded;
};

/// Two-cluster profile likelihood over an ascending angle list (Gaussian
/// clusters with pooled variance: maximizing it minimizes the within-cluster
/// sum of squares). The list is padded with 90 degree angles for the
/// |r1 - r2| directions of the larger space that have no partner. Lists with
/// one entry or a spread under 1 degree count angles below 45 degrees.
inline AngleSplit joint_rank_from_angles(std::vector<double> angles, Index r1, Index r2) {
  std::sort(angles.begin(), angles.end());
  const Index matched = std::min(r1, r2);
  require(static_cast<Index>(angles.size()) == matched, ErrorKind::kInvalidInput,
          "joint_rank_from_angles: expected min(r1, r2) angles");
  AngleSplit out;
  out.padded = angles;
  out.padded.resize(static_cast<std::size_t>(std::max(r1, r2)), 90.0);
  const auto& a = out.padded;
  const Index len = static_cast<Index>(a.size());
  if (len == 0) return out;
  const double spread = a.back() - a.front();
  if (len == 1 || spread < 1.0) {
    out.split_index = std::count_if(a.begin(), a.end(), [](double v) { return v < 45.0; });
    out.r0 = std::min(out.split_index, matched);
    return out;
  }
  const auto sse = [&](Index lo, Index hi) {
    double mean = 0.0;
    for (Index i = lo; i < hi; ++i) mean += a[i];
    mean /= static_cast<double>(hi - lo);
    double s = 0.0;
    for (Index i = lo; i < hi; ++i) s += (a[i] - mean) * (a[i] - mean);
    return s;
  };
  double best = std::numeric_limits<double>::infinity();
  for (Index k = 1; k < len; ++k) {
    const double s = sse(0, k) + sse(k, len);
    if (s < best - 1e-12) {
      best = s;
      out.split_index = k;
    }
  }
  out.r0 = std::min(out.split_index, matched);
  return out;
}

struct JointRankResult {
  Index r0 = 0;
  std::vector<double> angles_deg;  // ascending, length min(r1, r2)
  Index split_index = 0;
};

/// Principal angles between the column spaces of rank-r_k centered proxies
/// of the two natural-parameter matrices, split into small and large.
inline JointRankResult estimate_joint_rank(const MatrixXd& x1, const MatrixXd& x2,
                                           const ExpFamily& fam1, const ExpFamily& fam2,
                                           Index r1, Index r2, const EpcaOptions& opts = {}) {
  require(r1 >= 1 && r2 >= 1, ErrorKind::kInvalidInput,
          "estimate_joint_rank: r1 and r2 must be >= 1");
  require(x1.rows() == x2.rows(), ErrorKind::kInvalidInput,
          "estimate_joint_rank: views have different sample counts");
  const std::array<Index, 2> r{r1, r2};
  const std::array<const MatrixXd*, 2> xs{&x1, &x2};
  const std::array<ExpFamily, 2> fams{fam1, fam2};
  std::array<MatrixXd, 2> basis;
  for (int k = 0; k < 2; ++k) {
    const MatrixXd proxy = linalg::center_columns(epca_low_rank(*xs[k], fams[k], r[k], nullptr, opts).theta);
    Eigen::JacobiSVD<MatrixXd> svd(proxy, Eigen::ComputeThinU);
    basis[k] = svd.matrixU().leftCols(r[k]);
  }
  JointRankResult res;
  res.angles_deg = linalg::principal_angles_deg(basis[0], basis[1]);
  const AngleSplit split = joint_rank_from_angles(res.angles_deg, r1, r2);
  res.r0 = split.r0;
  res.split_index = split.split_index;
  return res;
}

struct RankEstimate {
  Index r0 = 0, r1 = 0, r2 = 0;
  std::array<std::vector<RankCurvePoint>, 2> cv_curves;
  std::vector<double> angles_deg;
  Index split_index = 0;
};

/// Total ranks by cross-validation on each view, then the joint rank.
inline RankEstimate estimate_ranks(const MatrixXd& x1, const MatrixXd& x2,
                                   const ExpFamily& fam1, const ExpFamily& fam2,
                                   const std::vector<Index>& grid1,
                                   const std::vector<Index>& grid2, int folds = 10,
                                   std::uint64_t seed = 1, const EpcaOptions& opts = {}) {
  RankEstimate est;
  const TotalRankResult t1 = estimate_total_rank(x1, fam1, grid1, folds, mix_seed(seed, 1), opts);
  const TotalRankResult t2 = estimate_total_rank(x2, fam2, grid2, folds, mix_seed(seed, 2), opts);
  est.r1 = t1.rank;
  est.r2 = t2.rank;
  est.cv_curves = {t1.curve, t2.curve};
  if (est.r1 >= 1 && est.r2 >= 1) {
    const JointRankResult j = estimate_joint_rank(x1, x2, fam1, fam2, est.r1, est.r2, opts);
    est.r0 = j.r0;
    est.angles_deg = j.angles_deg;
    est.split_index = j.split_index;
  }
  return est;
}

}  // namespace ecca
