#pragma once

// Independent reference implementations used to freeze expected values.
// Everything here is deliberately written from the defining formulas with
// its own kernel evaluations and plain loops, so it shares no code path
// with the library implementations it checks.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace oracle {

inline double gaussian_weight(double u, double h) { return std::exp(-(u * u) / (2.0 * h * h)); }

inline double epanechnikov_weight(double u, double h) {
  const double t = u / h;
  return t * t >= 1.0 ? 0.0 : 1.0 - t * t;
}

/// Naive double-loop conditional covariance at a single point z0 given the
/// fitted mean rows: {sum_i w_i r_i r_i^T} / {sum_i w_i}.
inline Eigen::MatrixXd conditional_covariance(const Eigen::MatrixXd& outputs,
                                              const Eigen::VectorXd& confounder,
                                              const Eigen::MatrixXd& mean_rows, double h,
                                              double z0, bool gaussian = true) {
  const Eigen::Index n = outputs.rows();
  const Eigen::Index p = outputs.cols();
  Eigen::MatrixXd numerator = Eigen::MatrixXd::Zero(p, p);
  double denominator = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = confounder(i) - z0;
    const double w = gaussian ? gaussian_weight(u, h) : epanechnikov_weight(u, h);
    const Eigen::VectorXd r = (outputs.row(i) - mean_rows.row(i)).transpose();
    for (Eigen::Index k = 0; k < p; ++k) {
      for (Eigen::Index l = 0; l < p; ++l) numerator(k, l) += w * r(k) * r(l);
    }
    denominator += w;
  }
  return numerator / denominator;
}

/// Naive Nadaraya-Watson mean at z0.
inline Eigen::VectorXd nw_mean(const Eigen::MatrixXd& outputs, const Eigen::VectorXd& confounder,
                               double h, double z0, bool gaussian = true) {
  const Eigen::Index n = outputs.rows();
  Eigen::VectorXd numerator = Eigen::VectorXd::Zero(outputs.cols());
  double denominator = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = confounder(i) - z0;
    const double w = gaussian ? gaussian_weight(u, h) : epanechnikov_weight(u, h);
    numerator += w * outputs.row(i).transpose();
    denominator += w;
  }
  return numerator / denominator;
}

/// Local-linear fit at z0 for every column, through the dense weighted
/// least-squares normal equations solved by LDLT.
inline Eigen::VectorXd local_linear_mean(const Eigen::MatrixXd& outputs,
                                         const Eigen::VectorXd& confounder, double h, double z0) {
  const Eigen::Index n = outputs.rows();
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd weights(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = confounder(i) - z0;
    weights(i) = gaussian_weight(confounder(i) - z0, h);
  }
  const Eigen::MatrixXd wd = weights.asDiagonal() * design;
  const Eigen::MatrixXd normal = design.transpose() * wd;
  Eigen::VectorXd result(outputs.cols());
  for (Eigen::Index j = 0; j < outputs.cols(); ++j) {
    const Eigen::Vector2d rhs = wd.transpose() * outputs.col(j);
    const Eigen::Vector2d coef = normal.ldlt().solve(rhs);
    result(j) = coef(0);
  }
  return result;
}

/// Standard normal quantile by bisection on the erf-based CDF.
inline double normal_quantile_bisect(double p, double tol = 1e-11) {
  double lo = -12.0;
  double hi = 12.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * (1.0 + std::erf(mid / std::sqrt(2.0)));
    if (cdf < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace oracle
