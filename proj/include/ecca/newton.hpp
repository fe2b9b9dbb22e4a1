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

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ecca/errors.hpp"
#include "ecca/expfam.hpp"
#include "ecca/linalg.hpp"

namespace ecca {

struct NewtonOptions {
  double grad_tol = 1e-8;
  int max_iter = 100;
  double armijo = 1e-4;
  double shrink = 0.5;
  double min_step = 1e-12;
  bool record_history = false;
};

/// One unconstrained exponential-family regression:
///   f(t) = sum_i w_i [ b(theta_i) - x_i theta_i ] + (gamma/2) ||t - target||^2
///   theta = offset + S t.
/// Empty offset/weights/target vectors mean zero/one/zero.
struct RowProblem {
  const MatrixXd& design;
  VectorXd x;
  ExpFamily fam;
  double prox_weight = 0.0;
  VectorXd prox_target{};
  VectorXd offset{};
  VectorXd weights{};
};

struct NewtonResult {
  VectorXd t;
  double objective = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;  // objective per accepted iterate
};

namespace detail {

inline void check_row_problem(const RowProblem& prob, const VectorXd& t) {
  const Index n = prob.design.rows();
  const Index q = prob.design.cols();
  require(prob.x.size() == n, ErrorKind::kInvalidInput,
          "newton: data length differs from design rows");
  require(t.size() == q, ErrorKind::kInvalidInput,
          "newton: start vector length differs from design columns");
  require(prob.offset.size() == 0 || prob.offset.size() == n,
          ErrorKind::kInvalidInput, "newton: offset length mismatch");
  require(prob.weights.size() == 0 || prob.weights.size() == n,
          ErrorKind::kInvalidInput, "newton: weight length mismatch");
  require(prob.prox_weight >= 0.0, ErrorKind::kInvalidInput,
          "newton: prox weight must be >= 0");
  require(prob.prox_weight == 0.0 || prob.prox_target.size() == 0 ||
              prob.prox_target.size() == q,
          ErrorKind::kInvalidInput, "newton: prox target length mismatch");
  require(t.allFinite(), ErrorKind::kInvalidInput, "newton: start is not finite");
}

inline VectorXd row_theta(const RowProblem& prob, const VectorXd& t) {
  VectorXd theta = prob.design * t;
  if (prob.offset.size() > 0) theta += prob.offset;
  return theta;
}

inline double prox_value(const RowProblem& prob, const VectorXd& t) {
  if (prob.prox_weight == 0.0) return 0.0;
  const double sq = prob.prox_target.size() == 0
                        ? t.squaredNorm()
                        : (t - prob.prox_target).squaredNorm();
  return 0.5 * prob.prox_weight * sq;
}

}  // namespace detail

inline double row_objective(const RowProblem& prob, const VectorXd& t) {
  const VectorXd theta = detail::row_theta(prob, t);
  detail::KahanSum s;
  for (Index i = 0; i < theta.size(); ++i) {
    const double w = prob.weights.size() ? prob.weights(i) : 1.0;
    if (w != 0.0) s.add(w * detail::nll_term(prob.fam, prob.x(i), theta(i)));
  }
  s.add(detail::prox_value(prob, t));
  return s.sum;
}

inline VectorXd row_gradient(const RowProblem& prob, const VectorXd& t) {
  const VectorXd theta = detail::row_theta(prob, t);
  VectorXd resid(theta.size());
  for (Index i = 0; i < theta.size(); ++i) {
    const double w = prob.weights.size() ? prob.weights(i) : 1.0;
    resid(i) = w * (detail::eval_b_unchecked(prob.fam, theta(i)).b1 - prob.x(i));
  }
  VectorXd g = prob.design.transpose() * resid;
  if (prob.prox_weight > 0.0) {
    g += prob.prox_weight *
         (prob.prox_target.size() ? VectorXd(t - prob.prox_target) : t);
  }
  return g;
}

inline MatrixXd row_hessian(const RowProblem& prob, const VectorXd& t) {
  const VectorXd theta = detail::row_theta(prob, t);
  VectorXd d(theta.size());
  for (Index i = 0; i < theta.size(); ++i) {
    const double w = prob.weights.size() ? prob.weights(i) : 1.0;
    d(i) = w * detail::eval_b_unchecked(prob.fam, theta(i)).b2;
  }
  MatrixXd h = prob.design.transpose() * d.asDiagonal() * prob.design;
  h.diagonal().array() += prob.prox_weight;
  return h;
}

/// Damped Newton with Armijo backtracking (initial step 1, halving).
/// Throws kNotPositiveDefinite when the Hessian fails Cholesky even after a
/// ridge of 1e-8 * trace / q, and kStalledStep (with the last iterate) when
/// the line search shrinks below min_step.
inline NewtonResult newton_solve_row(const RowProblem& prob, const VectorXd& t0,
                                     const NewtonOptions& opts = {}) {
  detail::check_row_problem(prob, t0);
  const Index q = t0.size();
  NewtonResult res;
  res.t = t0;
  if (q == 0) {
    res.objective = row_objective(prob, res.t);
    res.converged = true;
    return res;
  }
  double f = row_objective(prob, res.t);
  require(std::isfinite(f), ErrorKind::kInvalidInput,
          "newton: objective not finite at start");
  if (opts.record_history) res.history.push_back(f);

  for (int it = 0;; ++it) {
    const VectorXd g = row_gradient(prob, res.t);
    res.grad_norm = g.norm();
    res.iterations = it;
    if (res.grad_norm <= opts.grad_tol) {
      res.converged = true;
      break;
    }
    if (it >= opts.max_iter) break;

    MatrixXd h = row_hessian(prob, res.t);
    Eigen::LLT<MatrixXd> llt(h);
    if (llt.info() != Eigen::Success) {
      const double tr = h.trace();
      h.diagonal().array() += (tr > 0.0 ? 1e-8 * tr / q : 1e-8);
      llt.compute(h);
      if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::kNotPositiveDefinite,
                    "newton: Hessian not positive definite after ridge", res.t);
      }
    }
    const VectorXd d = -llt.solve(g);
    const double slope = g.dot(d);

    double step = 1.0;
    VectorXd trial = res.t + d;
    double ft = row_objective(prob, trial);
    while (!(ft <= f + opts.armijo * step * slope)) {
      step *= opts.shrink;
      if (step < opts.min_step) {
        // Predicted decrease at rounding level: nothing left to gain.
        if (-slope <= 1e-13 * std::max(1.0, std::abs(f))) {
          res.objective = f;
          return res;
        }
        throw Error(ErrorKind::kStalledStep,
                    "newton: line search stalled (step < " +
                        std::to_string(opts.min_step) + ")",
                    res.t);
      }
      trial = res.t + step * d;
      ft = row_objective(prob, trial);
    }
    res.t = std::move(trial);
    f = ft;
    if (opts.record_history) res.history.push_back(f);
  }
  res.objective = f;
  return res;
}

/// Loadings T = (mu V A) for one view given scores S = (1 U Z): Gaussian
/// uses the least-squares solution (S^+ X)^T, otherwise one Newton solve per
/// feature warm-started at T0.
inline MatrixXd update_loadings(const MatrixXd& x, const ExpFamily& fam,
                                const MatrixXd& s, const MatrixXd& t0,
                                const NewtonOptions& opts = {}) {
  require(s.rows() == x.rows(), ErrorKind::kInvalidInput,
          "update_loadings: S and X row counts differ");
  require(t0.rows() == x.cols() && t0.cols() == s.cols(),
          ErrorKind::kInvalidInput, "update_loadings: T0 has the wrong shape");
  check_data(fam, x, "update_loadings");
  if (s.cols() == 0) return MatrixXd(x.cols(), 0);
  if (fam.is_gaussian()) return (linalg::pinv(s) * x).transpose();
  MatrixXd t(t0.rows(), t0.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    RowProblem prob{s, x.col(j), fam};
    try {
      t.row(j) = newton_solve_row(prob, t0.row(j).transpose(), opts).t.transpose();
    } catch (const Error& e) {
      throw e.with_context("feature " + std::to_string(j));
    }
  }
  return t;
}

}  // namespace ecca
