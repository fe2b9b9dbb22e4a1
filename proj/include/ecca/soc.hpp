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
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ecca/errors.hpp"
#include "ecca/expfam.hpp"
#include "ecca/linalg.hpp"
#include "ecca/newton.hpp"

namespace ecca {

struct SocOptions {
  double gamma = 1000.0;  // inverse step size
  int max_iter = 500;
  double primal_tol = 1e-6;
  double dual_tol = 1e-6;
  NewtonOptions inner{1e-6};

  void validate() const {
    require(gamma > 0.0, ErrorKind::kInvalidInput, "soc: gamma must be > 0");
    require(max_iter >= 1, ErrorKind::kInvalidInput, "soc: max_iter must be >= 1");
    require(primal_tol > 0.0 && dual_tol > 0.0, ErrorKind::kInvalidInput,
            "soc: tolerances must be > 0");
  }
};

struct SocTrace {
  std::vector<double> primal;     // ||Z - P||_F
  std::vector<double> dual;       // ||P(t) - P(t-1)||_F
  std::vector<double> objective;  // likelihood at P(t)
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  bool kept_start = false;  // final P was worse than the projected start
};

/// One view's contribution to a score subproblem: the natural parameter is
/// fixed + W * loadings^T for the score block W being solved for.
struct ScoreBlock {
  const MatrixXd& x;
  ExpFamily fam;
  const MatrixXd& fixed;
  const MatrixXd& loadings;

  double objective(const MatrixXd& w) const {
    if (w.cols() == 0) return nll(fam, x, fixed);
    return nll(fam, x, fixed + w * loadings.transpose());
  }
};

/// argmin_Z ||Y - Z A^T||^2 + gamma ||Z + W||^2 = (Y A - gamma W)(A^T A + gamma I)^{-1}.
inline MatrixXd gaussian_prox_Z(const MatrixXd& y, const MatrixXd& a, double gamma,
                                const MatrixXd& w) {
  require(gamma > 0.0, ErrorKind::kInvalidInput, "gaussian_prox_Z: gamma must be > 0");
  require(y.cols() == a.rows() && w.rows() == y.rows() && w.cols() == a.cols(),
          ErrorKind::kInvalidInput, "gaussian_prox_Z: shape mismatch");
  MatrixXd gram = a.transpose() * a;
  gram.diagonal().array() += gamma;
  const MatrixXd rhs = y * a - gamma * w;
  return gram.llt().solve(rhs.transpose()).transpose();
}

/// Exact minimizer of 1/2 ||Y - Z A^T||^2 over Z with U^T Z = 0, Z^T Z = I:
/// Z = Q R^T from the thin SVD (I - U U^+) Y A = Q D R^T.
inline MatrixXd gaussian_Z_closed_form(const MatrixXd& y, const MatrixXd& a,
                                       const MatrixXd& u) {
  require(y.cols() == a.rows(), ErrorKind::kInvalidInput,
          "gaussian_Z_closed_form: Y and A do not conform");
  return linalg::constrained_procrustes(y * a, u);
}

inline MatrixXd block_diag(const MatrixXd& a1, const MatrixXd& a2) {
  MatrixXd out = MatrixXd::Zero(a1.rows() + a2.rows(), a1.cols() + a2.cols());
  out.topLeftCorner(a1.rows(), a1.cols()) = a1;
  out.bottomRightCorner(a2.rows(), a2.cols()) = a2;
  return out;
}

namespace detail {

inline MatrixXd prox_step(const ScoreBlock& blk, const MatrixXd& target,
                          const MatrixXd& warm, double gamma,
                          const NewtonOptions& inner) {
  const Index q = target.cols();
  if (q == 0) return target;
  if (blk.fam.is_gaussian()) {
    return gaussian_prox_Z(blk.x - blk.fixed, blk.loadings, gamma, -target);
  }
  MatrixXd out(target.rows(), q);
  for (Index i = 0; i < target.rows(); ++i) {
    RowProblem prob{blk.loadings, blk.x.row(i).transpose(), blk.fam, gamma,
                    target.row(i).transpose(), blk.fixed.row(i).transpose()};
    try {
      out.row(i) = newton_solve_row(prob, warm.row(i).transpose(), inner).t.transpose();
    } catch (const Error& e) {
      throw e.with_context("score row " + std::to_string(i));
    }
  }
  return out;
}

inline double total_objective(const std::vector<ScoreBlock>& blocks,
                              const std::vector<MatrixXd>& parts) {
  double f = 0.0;
  for (std::size_t b = 0; b < blocks.size(); ++b) f += blocks[b].objective(parts[b]);
  return f;
}

inline std::vector<MatrixXd> split_cols(const MatrixXd& m, const std::vector<Index>& widths) {
  std::vector<MatrixXd> out;
  Index at = 0;
  for (Index w : widths) {
    out.push_back(m.middleCols(at, w));
    at += w;
  }
  return out;
}

inline MatrixXd join_cols(const std::vector<MatrixXd>& parts, Index rows) {
  std::vector<const MatrixXd*> ptrs;
  for (const auto& p : parts) ptrs.push_back(&p);
  return linalg::hcat(ptrs, rows);
}

}  // namespace detail

struct SocResult {
  std::vector<MatrixXd> scores;  // one per block, exactly feasible
  SocTrace trace;
};

/// Splitting iteration for
///   min sum_b L(fixed_b + W_b L_b^T | X_b)  s.t.  C^T (W_1 .. W_B) = 0,
///   (W_1 .. W_B)^T (W_1 .. W_B) = I.
/// Each pass solves the proximal problems per block, projects Z + B onto the
/// constraint set jointly, and updates the scaled multipliers B (reset to
/// zero on entry). The returned scores are the projected iterate P, so they
/// are feasible whether or not the residuals converged; if P ends worse than
/// the projection of the start, the projected start is returned instead.
inline SocResult soc_solve(const std::vector<ScoreBlock>& blocks,
                           const MatrixXd& constraint,
                           const std::vector<MatrixXd>& starts,
                           const SocOptions& opts) {
  opts.validate();
  require(blocks.size() == starts.size() && !blocks.empty(),
          ErrorKind::kInvalidInput, "soc: one start per block required");
  const Index n = starts.front().rows();
  std::vector<Index> widths;
  Index total = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    require(starts[b].rows() == n && blocks[b].x.rows() == n &&
                blocks[b].fixed.rows() == n &&
                blocks[b].fixed.cols() == blocks[b].x.cols() &&
                blocks[b].loadings.rows() == blocks[b].x.cols() &&
                blocks[b].loadings.cols() == starts[b].cols(),
            ErrorKind::kInvalidInput, "soc: block " + std::to_string(b) + " shape mismatch");
    widths.push_back(starts[b].cols());
    total += starts[b].cols();
  }
  SocResult res;
  res.scores = starts;
  if (total == 0) {
    res.trace.converged = true;
    return res;
  }

  const MatrixXd start_p = linalg::constrained_procrustes(detail::join_cols(starts, n), constraint);
  const std::vector<MatrixXd> baseline = detail::split_cols(start_p, widths);
  const double baseline_obj = detail::total_objective(blocks, baseline);

  std::vector<MatrixXd> z = starts;
  MatrixXd p = start_p;
  MatrixXd mult = MatrixXd::Zero(n, total);
  double best_resid = std::numeric_limits<double>::infinity();
  SocTrace& tr = res.trace;

  for (int t = 1; t <= opts.max_iter; ++t) {
    const std::vector<MatrixXd> p_parts = detail::split_cols(p, widths);
    const std::vector<MatrixXd> b_parts = detail::split_cols(mult, widths);
    for (std::size_t b = 0; b < blocks.size(); ++b)
      z[b] = detail::prox_step(blocks[b], p_parts[b] - b_parts[b], z[b], opts.gamma, opts.inner);
    const MatrixXd zj = detail::join_cols(z, n);
    MatrixXd p_next = linalg::constrained_procrustes(zj + mult, constraint);
    mult += zj - p_next;

    const double primal = (zj - p_next).norm();
    const double dual = (p_next - p).norm();
    p = std::move(p_next);
    tr.primal.push_back(primal);
    tr.dual.push_back(dual);
    tr.objective.push_back(detail::total_objective(blocks, detail::split_cols(p, widths)));
    tr.iterations = t;

    if (primal <= opts.primal_tol && dual <= opts.dual_tol) {
      tr.converged = true;
      break;
    }
    const double resid = std::max(primal, dual);
    if (resid > 10.0 * std::max(best_resid, std::max(opts.primal_tol, opts.dual_tol))) {
      tr.diverged = true;
      break;
    }
    best_resid = std::min(best_resid, resid);
  }

  res.scores = detail::split_cols(p, widths);
  if (tr.objective.back() > baseline_obj) {
    res.scores = baseline;
    tr.kept_start = true;
  }
  return res;
}

/// Individual-score update: joint SOC over (Z_1, Z_2) with
/// (1 U_1 U_2)^T (Z_1 Z_2) = 0 and (Z_1 Z_2)^T (Z_1 Z_2) = I.
/// fixed_k = 1 mu_k^T + U_k V_k^T.
struct SocZResult {
  MatrixXd z1;
  MatrixXd z2;
  SocTrace trace;
};

inline SocZResult soc_update_Z(const MatrixXd& x1, const MatrixXd& x2,
                               const ExpFamily& fam1, const ExpFamily& fam2,
                               const MatrixXd& fixed1, const MatrixXd& fixed2,
                               const MatrixXd& a1, const MatrixXd& a2,
                               const MatrixXd& u, const MatrixXd& z0_1,
                               const MatrixXd& z0_2, const SocOptions& opts = {}) {
  std::vector<ScoreBlock> blocks{{x1, fam1, fixed1, a1}, {x2, fam2, fixed2, a2}};
  SocResult r = soc_solve(blocks, u, {z0_1, z0_2}, opts);
  return {std::move(r.scores[0]), std::move(r.scores[1]), std::move(r.trace)};
}

/// Correlated-score update without the diagonal cross constraint; separates
/// into one SOC problem per view, each with (1 Z_1 Z_2)^T U_k = 0 and
/// U_k^T U_k = I. fixed_k = 1 mu_k^T + Z_k A_k^T.
struct SocUResult {
  MatrixXd u1;
  MatrixXd u2;
  std::array<SocTrace, 2> trace;
};

inline SocUResult soc_update_U(const MatrixXd& x1, const MatrixXd& x2,
                               const ExpFamily& fam1, const ExpFamily& fam2,
                               const MatrixXd& fixed1, const MatrixXd& fixed2,
                               const MatrixXd& v1, const MatrixXd& v2,
                               const MatrixXd& zfull, const MatrixXd& u0_1,
                               const MatrixXd& u0_2, const SocOptions& opts = {}) {
  SocUResult out;
  SocResult r1 = soc_solve({{x1, fam1, fixed1, v1}}, zfull, {u0_1}, opts);
  SocResult r2 = soc_solve({{x2, fam2, fixed2, v2}}, zfull, {u0_2}, opts);
  out.u1 = std::move(r1.scores[0]);
  out.u2 = std::move(r2.scores[0]);
  out.trace = {std::move(r1.trace), std::move(r2.trace)};
  return out;
}

/// Gaussian correlated-score update for one view: U = G H^T from the thin
/// SVD (I - Z Z^+)(X - fixed) V = G L H^T.
inline MatrixXd gaussian_U_closed_form(const MatrixXd& x, const MatrixXd& fixed,
                                       const MatrixXd& v, const MatrixXd& zfull) {
  require(x.cols() == v.rows(), ErrorKind::kInvalidInput,
          "gaussian_U_closed_form: X and V do not conform");
  return linalg::constrained_procrustes((x - fixed) * v, zfull);
}

}  // namespace ecca
