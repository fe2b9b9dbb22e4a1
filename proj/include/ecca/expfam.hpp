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

#include <Eigen/Dense>

#include "ecca/errors.hpp"

namespace ecca {

enum class FamilyKind { kGaussian, kBinomial };

/// Exponential family of one view. Gaussian has unit variance; Binomial
/// models proportions x = y / m with y ~ Binomial(m, p) and natural
/// parameter theta = m * logit(p).
struct ExpFamily {
  FamilyKind kind = FamilyKind::kGaussian;
  int trials = 1;

  static ExpFamily gaussian() { return {FamilyKind::kGaussian, 1}; }

  static ExpFamily binomial(int m) {
    require(m >= 1, ErrorKind::kInvalidInput,
            "binomial trial count must be >= 1, got " + std::to_string(m));
    return {FamilyKind::kBinomial, m};
  }

  bool is_gaussian() const { return kind == FamilyKind::kGaussian; }
  bool is_binomial() const { return kind == FamilyKind::kBinomial; }

  // "gaussian" or "binomial:<m>".
  std::string str() const {
    return is_gaussian() ? std::string("gaussian")
                         : "binomial:" + std::to_string(trials);
  }

  friend bool operator==(const ExpFamily& a, const ExpFamily& b) {
    return a.kind == b.kind && (a.is_gaussian() || a.trials == b.trials);
  }
};

inline ExpFamily parse_family(const std::string& text) {
  if (text == "gaussian") return ExpFamily::gaussian();
  const std::string prefix = "binomial:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string tail = text.substr(prefix.size());
    std::size_t used = 0;
    int m = 0;
    try {
      m = std::stoi(tail, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == tail.size() && !tail.empty(), ErrorKind::kInvalidInput,
            "family: cannot parse trial count in '" + text + "'");
    return ExpFamily::binomial(m);
  }
  if (text == "binomial") return ExpFamily::binomial(1);
  throw Error(ErrorKind::kInvalidInput,
              "family: expected 'gaussian' or 'binomial:<m>', got '" + text +
                  "'");
}

/// Cumulant b(theta) with its first two derivatives (mean and variance).
struct Cumulant {
  double b;
  double b1;
  double b2;
};

namespace detail {

// log(1 + exp(u)) without overflow.
inline double softplus(double u) {
  return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)));
}

inline double sigmoid(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

inline Cumulant eval_b_unchecked(const ExpFamily& fam, double theta) {
  if (fam.is_gaussian()) return {0.5 * theta * theta, theta, 1.0};
  const double m = fam.trials;
  const double u = theta / m;
  const double p = sigmoid(u);
  // p * (1 - p) written with the smaller tail to keep precision near 0 and 1.
  const double q = sigmoid(-u);
  return {m * softplus(u), p, p * q / m};
}

}  // namespace detail

inline Cumulant eval_b(const ExpFamily& fam, double theta) {
  require(std::isfinite(theta), ErrorKind::kInvalidInput,
          "eval_b: theta must be finite");
  return detail::eval_b_unchecked(fam, theta);
}

/// Elementwise mean b'(Theta).
inline Eigen::MatrixXd mean_of(const ExpFamily& fam, const Eigen::MatrixXd& theta) {
  if (fam.is_gaussian()) return theta;
  const double m = fam.trials;
  return theta.unaryExpr([m](double t) { return detail::sigmoid(t / m); });
}

inline void check_data(const ExpFamily& fam, const Eigen::MatrixXd& x,
                       const std::string& where) {
  require(x.allFinite(), ErrorKind::kInvalidInput,
          where + ": data contains non-finite entries");
  if (fam.is_binomial()) {
    require(x.size() == 0 || (x.minCoeff() >= 0.0 && x.maxCoeff() <= 1.0),
            ErrorKind::kInvalidInput,
            where + ": binomial proportions must lie in [0, 1]");
  }
}

namespace detail {

// Kahan-compensated accumulator; the block solvers compare objective values
// that differ by far less than their magnitude.
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

inline double nll_term(const ExpFamily& fam, double x, double theta) {
  if (fam.is_gaussian()) {
    const double r = theta - x;
    return 0.5 * r * r;
  }
  return -x * theta + fam.trials * softplus(theta / fam.trials);
}

// Gaussian terms are accumulated as 0.5 * (theta - x)^2 and the data-only
// constant -0.5 * x^2 is added separately, so two evaluations on the same X
// differ only through the residual part.
inline double gaussian_offset(const Eigen::MatrixXd& x) {
  KahanSum s;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) s.add(-0.5 * x(i, j) * x(i, j));
  return s.sum;
}

}  // namespace detail

/// Negative log-likelihood sum_ij [ -x_ij theta_ij + b(theta_ij) ], with the
/// data-only constant c(x) dropped.
inline double nll(const ExpFamily& fam, const Eigen::MatrixXd& x,
                  const Eigen::MatrixXd& theta) {
  require(x.rows() == theta.rows() && x.cols() == theta.cols(),
          ErrorKind::kInvalidInput, "nll: X and Theta shapes differ");
  check_data(fam, x, "nll");
  detail::KahanSum s;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      s.add(detail::nll_term(fam, x(i, j), theta(i, j)));
  return fam.is_gaussian() ? s.sum + detail::gaussian_offset(x) : s.sum;
}

/// Same as nll() restricted to entries where mask is true.
inline double masked_nll(const ExpFamily& fam, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& theta,
                         const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask) {
  require(x.rows() == theta.rows() && x.cols() == theta.cols() &&
              mask.rows() == x.rows() && mask.cols() == x.cols(),
          ErrorKind::kInvalidInput, "masked_nll: shape mismatch");
  detail::KahanSum s;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (!mask(i, j)) continue;
      s.add(detail::nll_term(fam, x(i, j), theta(i, j)));
      if (fam.is_gaussian()) s.add(-0.5 * x(i, j) * x(i, j));
    }
  return s.sum;
}

/// Minimum of the per-entry nll over theta: -x^2/2 for Gaussian and
/// m * H(x) (binary entropy, 0 at the boundary) for Binomial.
inline double saturated_nll_term(const ExpFamily& fam, double x) {
  if (fam.is_gaussian()) return -0.5 * x * x;
  auto xlogx = [](double v) { return v > 0.0 ? v * std::log(v) : 0.0; };
  return -fam.trials * (xlogx(x) + xlogx(1.0 - x));
}

/// Boundary adjustment applied before taking logits: 0 -> 0.375/(m+0.75),
/// 1 -> (m+0.375)/(m+0.75).
inline double adjust_proportion(double x, int m) {
  if (x <= 0.0) return 0.375 / (m + 0.75);
  if (x >= 1.0) return (m + 0.375) / (m + 0.75);
  return x;
}

/// Entrywise unconstrained MLE of the natural parameter.
inline Eigen::MatrixXd saturated_theta(const ExpFamily& fam,
                                       const Eigen::MatrixXd& x) {
  check_data(fam, x, "saturated_theta");
  if (fam.is_gaussian()) return x;
  const int m = fam.trials;
  return x.unaryExpr([m](double v) {
    const double a = adjust_proportion(v, m);
    return m * (std::log(a) - std::log1p(-a));
  });
}

}  // namespace ecca
