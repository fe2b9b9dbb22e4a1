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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ecca/errors.hpp"
#include "ecca/expfam.hpp"
#include "ecca/linalg.hpp"
#include "ecca/model.hpp"
#include "ecca/newton.hpp"
#include "ecca/soc.hpp"

namespace ecca {

struct FitOptions {
  double eps = 0.0;  // <= 0 selects 1e-6 * n * (p1 + p2)
  int t_max = 100;
  SocOptions soc;
  NewtonOptions newton;
  bool intercept = true;
  double divergence_rel = 1e-3;

  void validate() const {
    require(std::isfinite(eps), ErrorKind::kInvalidInput, "fit: eps must be finite");
    require(t_max >= 1, ErrorKind::kInvalidInput, "fit: t_max must be >= 1");
    soc.validate();
  }

  double resolved_eps(Index n, Index p1, Index p2) const {
    return eps > 0.0 ? eps : 1e-6 * static_cast<double>(n * (p1 + p2));
  }
};

/// Summary of one SOC solve inside the outer loop.
struct SocSummary {
  int iterations = 0;
  bool converged = true;
  bool diverged = false;
  bool kept_start = false;
  double primal = 0.0;
  double dual = 0.0;

  static SocSummary from(const SocTrace& tr) {
    SocSummary s;
    s.iterations = tr.iterations;
    s.converged = tr.converged;
    s.diverged = tr.diverged;
    s.kept_start = tr.kept_start;
    if (!tr.primal.empty()) {
      s.primal = tr.primal.back();
      s.dual = tr.dual.back();
    }
    return s;
  }
};

struct FitIteration {
  double nll_loadings = 0.0;
  double nll_z = 0.0;
  double nll_u = 0.0;
  double nll_rotation = 0.0;  // = total nll of the iteration
  double max_residual = 0.0;
  std::vector<SocSummary> soc;  // Z update first (if run), then U per view
};

struct FitTrace {
  double initial_nll = 0.0;
  double initial_residual = 0.0;
  std::vector<FitIteration> iterations;
  bool converged = false;
  bool diverged = false;  // nll rose by more than divergence_rel somewhere
  std::vector<std::string> warnings;

  /// Outer nll sequence starting with the initial value.
  std::vector<double> nll_path() const {
    std::vector<double> out{initial_nll};
    for (const auto& it : iterations) out.push_back(it.nll_rotation);
    return out;
  }
  double final_nll() const {
    return iterations.empty() ? initial_nll : iterations.back().nll_rotation;
  }
};

struct FitResult {
  EccaModel model;
  FitTrace trace;
};

/// Rotated correlated scores and loadings.
struct Rotation {
  MatrixXd u1, u2, v1, v2;
  VectorXd lambda;
};

/// U_1~^T U_2~ = G1 Lambda G2^T; U_k = U_k~ G_k and V_k = V_k~ G_k.
inline Rotation rotate_correlated_scores(const MatrixXd& u1, const MatrixXd& u2,
                                         const MatrixXd& v1, const MatrixXd& v2) {
  require(u1.cols() == u2.cols() && v1.cols() == u1.cols() && v2.cols() == u2.cols() &&
              u1.rows() == u2.rows(),
          ErrorKind::kInvalidInput, "rotate_correlated_scores: shape mismatch");
  const Index r = u1.cols();
  if (r == 0) return {u1, u2, v1, v2, VectorXd(0)};
  Eigen::JacobiSVD<MatrixXd> svd(u1.transpose() * u2,
                                 Eigen::ComputeFullU | Eigen::ComputeFullV);
  const MatrixXd& g1 = svd.matrixU();
  const MatrixXd& g2 = svd.matrixV();
  return {u1 * g1, u2 * g2, v1 * g1, v2 * g2, svd.singularValues().cwiseMin(1.0)};
}

namespace detail {

inline MatrixXd top_left_singular(const MatrixXd& m, Index k) {
  if (k == 0) return MatrixXd(m.rows(), 0);
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU);
  const VectorXd& s = svd.singularValues();
  require(s.size() >= k && s(k - 1) > linalg::kBasisTol * std::max(s(0), 1e-300),
          ErrorKind::kDegenerateInput,
          "initialize: saturated parameters have rank below " + std::to_string(k));
  MatrixXd q = svd.matrixU().leftCols(k);
  linalg::fix_column_signs(q);
  return q;
}

inline void check_ranks(Index n, Index p1, Index p2, Index r0, Index r1, Index r2,
                        bool intercept) {
  require(r0 >= 0 && r0 <= std::min(r1, r2), ErrorKind::kInvalidInput,
          "ranks: need 0 <= r0 <= min(r1, r2)");
  const Index cap = intercept ? n - 1 : n;
  require(r1 <= std::min(cap, p1) && r2 <= std::min(cap, p2), ErrorKind::kInfeasible,
          "ranks: r_k must not exceed min(n - 1, p_k)");
  require((intercept ? 1 : 0) + r1 + r2 <= n, ErrorKind::kInfeasible,
          "ranks: 1 + r1 + r2 must not exceed n");
}

inline MatrixXd ones_col(Index n, bool intercept) {
  return MatrixXd::Ones(n, intercept ? 1 : 0);
}

}  // namespace detail

/// Starting point from the saturated parameters: the centered saturated
/// matrix of each view is truncated to rank r_k; U_k are its leading r0
/// canonical variables, Z_k the leading left singular vectors of the
/// remainder after projecting out (1, U_1, U_2), made mutually orthogonal.
inline EccaModel initialize(const MatrixXd& x1, const MatrixXd& x2, const ExpFamily& fam1,
                            const ExpFamily& fam2, Index r0, Index r1, Index r2,
                            bool intercept = true) {
  require(x1.rows() == x2.rows(), ErrorKind::kInvalidInput,
          "initialize: views have different sample counts");
  const Index n = x1.rows();
  detail::check_ranks(n, x1.cols(), x2.cols(), r0, r1, r2, intercept);
  EccaModel m = EccaModel::zeros(n, x1.cols(), x2.cols(), r0, r1, r2, fam1, fam2);
  m.intercept = intercept;
  const std::array<const MatrixXd*, 2> xs{&x1, &x2};
  const std::array<Index, 2> r{r1, r2};

  std::array<MatrixXd, 2> tilde, q;
  for (int k = 0; k < 2; ++k) {
    const MatrixXd sat = saturated_theta(m.fam[k], *xs[k]);
    require(sat.allFinite(), ErrorKind::kDegenerateInput,
            "initialize: non-finite saturated parameters");
    if (intercept) {
      m.mu[k] = sat.colwise().mean().transpose();
      tilde[k] = sat.rowwise() - m.mu[k].transpose();
    } else {
      tilde[k] = sat;
    }
    q[k] = detail::top_left_singular(tilde[k], r[k]);
  }

  if (r0 > 0) {
    const linalg::CanonicalPairs cp = linalg::principal_pairs(q[0], q[1]);
    m.u[0] = cp.u1.leftCols(r0);
    m.u[1] = cp.u2.leftCols(r0);
    m.lambda = cp.rho.head(r0);
  }

  if (r1 > r0 || r2 > r0) {
    const MatrixXd outer = m.joint_constraint();
    std::array<MatrixXd, 2> zt;
    for (int k = 0; k < 2; ++k)
      zt[k] = detail::top_left_singular(linalg::project_complement(outer, tilde[k]),
                                        r[k] - r0);
    const MatrixXd joint =
        linalg::constrained_procrustes(linalg::hcat({&zt[0], &zt[1]}, n), outer);
    m.z[0] = joint.leftCols(r1 - r0);
    m.z[1] = joint.rightCols(r2 - r0);
  }

  for (int k = 0; k < 2; ++k) {
    m.v[k] = tilde[k].transpose() * m.u[k];
    m.a[k] = tilde[k].transpose() * m.z[k];
  }
  return m;
}

namespace detail {

inline void loadings_stage(EccaModel& m, const std::array<const MatrixXd*, 2>& xs,
                           const NewtonOptions& newton) {
  const Index n = m.n();
  const MatrixXd ones = ones_col(n, m.intercept);
  for (int k = 0; k < 2; ++k) {
    const MatrixXd s = linalg::hcat({&ones, &m.u[k], &m.z[k]}, n);
    const MatrixXd mu = m.intercept ? MatrixXd(m.mu[k]) : MatrixXd(m.p(k), 0);
    const MatrixXd t0 = linalg::hcat({&mu, &m.v[k], &m.a[k]}, m.p(k));
    MatrixXd t;
    try {
      t = update_loadings(*xs[k], m.fam[k], s, t0, newton);
    } catch (const Error& e) {
      throw e.with_context("view " + std::to_string(k + 1));
    }
    Index at = 0;
    if (m.intercept) m.mu[k] = t.col(at++);
    m.v[k] = t.middleCols(at, m.r0());
    at += m.r0();
    m.a[k] = t.middleCols(at, m.individual_rank(k));
  }
}

inline MatrixXd fixed_part(const EccaModel& m, int k, bool with_u) {
  MatrixXd f = MatrixXd::Zero(m.n(), m.p(k));
  f.rowwise() += m.mu[k].transpose();
  if (with_u && m.r0() > 0) f.noalias() += m.u[k] * m.v[k].transpose();
  if (!with_u && m.individual_rank(k) > 0) f.noalias() += m.z[k] * m.a[k].transpose();
  return f;
}

inline void z_stage(EccaModel& m, const std::array<const MatrixXd*, 2>& xs,
                    const SocOptions& soc, FitIteration& it) {
  const Index q1 = m.individual_rank(0), q2 = m.individual_rank(1);
  if (q1 + q2 == 0) return;
  const MatrixXd f1 = fixed_part(m, 0, true), f2 = fixed_part(m, 1, true);
  const MatrixXd outer = m.joint_constraint();
  if (m.fam[0].is_gaussian() && m.fam[1].is_gaussian()) {
    const MatrixXd y1 = *xs[0] - f1, y2 = *xs[1] - f2;
    const MatrixXd z = gaussian_Z_closed_form(linalg::hcat({&y1, &y2}, m.n()),
                                              block_diag(m.a[0], m.a[1]), outer);
    m.z[0] = z.leftCols(q1);
    m.z[1] = z.rightCols(q2);
    return;
  }
  SocZResult r = soc_update_Z(*xs[0], *xs[1], m.fam[0], m.fam[1], f1, f2, m.a[0], m.a[1],
                              outer, m.z[0], m.z[1], soc);
  m.z[0] = std::move(r.z1);
  m.z[1] = std::move(r.z2);
  it.soc.push_back(SocSummary::from(r.trace));
}

inline void u_stage(EccaModel& m, const std::array<const MatrixXd*, 2>& xs,
                    const SocOptions& soc, FitIteration& it) {
  if (m.r0() == 0) return;
  const MatrixXd inner = m.individual_constraint();
  for (int k = 0; k < 2; ++k) {
    const MatrixXd f = fixed_part(m, k, false);
    if (m.fam[k].is_gaussian()) {
      m.u[k] = gaussian_U_closed_form(*xs[k], f, m.v[k], inner);
      continue;
    }
    SocResult r = soc_solve({{*xs[k], m.fam[k], f, m.v[k]}}, inner, {m.u[k]}, soc);
    m.u[k] = std::move(r.scores[0]);
    it.soc.push_back(SocSummary::from(r.trace));
  }
}

}  // namespace detail

/// Alternating block minimization starting from the given model.
inline FitResult fit_from(const EccaModel& start, const MatrixXd& x1, const MatrixXd& x2,
                          const FitOptions& opts = {}) {
  opts.validate();
  start.check_shapes();
  require(x1.rows() == start.n() && x2.rows() == start.n() && x1.cols() == start.p(0) &&
              x2.cols() == start.p(1),
          ErrorKind::kInvalidInput, "fit: data shapes do not match the model");
  check_data(start.fam[0], x1, "fit(X1)");
  check_data(start.fam[1], x2, "fit(X2)");

  FitResult res{start, {}};
  EccaModel& m = res.model;
  FitTrace& tr = res.trace;
  m.intercept = opts.intercept;
  if (!m.intercept) m.mu = {VectorXd::Zero(m.p(0)), VectorXd::Zero(m.p(1))};
  const std::array<const MatrixXd*, 2> xs{&x1, &x2};
  const bool all_gaussian = m.fam[0].is_gaussian() && m.fam[1].is_gaussian();
  const double eps = opts.resolved_eps(m.n(), m.p(0), m.p(1));

  tr.initial_nll = model_nll(m, x1, x2);
  tr.initial_residual = constraint_residuals(m).max();
  double prev = tr.initial_nll;

  for (int t = 1; t <= opts.t_max; ++t) {
    FitIteration it;
    const auto stage = [&](const char* name, auto&& fn) {
      try {
        fn();
      } catch (const Error& e) {
        throw e.with_context("outer iteration " + std::to_string(t) + ", " + name +
                             " update");
      }
    };
    stage("loadings", [&] { detail::loadings_stage(m, xs, opts.newton); });
    it.nll_loadings = model_nll(m, x1, x2);
    stage("individual score", [&] { detail::z_stage(m, xs, opts.soc, it); });
    it.nll_z = model_nll(m, x1, x2);
    stage("correlated score", [&] { detail::u_stage(m, xs, opts.soc, it); });
    it.nll_u = model_nll(m, x1, x2);
    Rotation rot = rotate_correlated_scores(m.u[0], m.u[1], m.v[0], m.v[1]);
    m.u = {std::move(rot.u1), std::move(rot.u2)};
    m.v = {std::move(rot.v1), std::move(rot.v2)};
    m.lambda = std::move(rot.lambda);
    it.nll_rotation = model_nll(m, x1, x2);
    it.max_residual = constraint_residuals(m).max();
    for (const auto& s : it.soc) {
      if (s.diverged)
        tr.warnings.push_back("iteration " + std::to_string(t) + ": SOC residuals diverged");
    }

    const double cur = it.nll_rotation;
    tr.iterations.push_back(std::move(it));
    if (!all_gaussian && cur > prev + opts.divergence_rel * std::abs(prev)) {
      tr.diverged = true;
      tr.warnings.push_back("iteration " + std::to_string(t) +
                            ": negative log-likelihood increased");
    }
    if (std::abs(cur - prev) <= eps) {
      tr.converged = true;
      break;
    }
    prev = cur;
  }
  return res;
}

inline FitResult fit_ecca(const MatrixXd& x1, const MatrixXd& x2, const ExpFamily& fam1,
                          const ExpFamily& fam2, Index r0, Index r1, Index r2,
                          const FitOptions& opts = {}) {
  opts.validate();
  const EccaModel init = initialize(x1, x2, fam1, fam2, r0, r1, r2, opts.intercept);
  return fit_from(init, x1, x2, opts);
}

}  // namespace ecca
