#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "condcov/rng.hpp"
#include "condcov/series.hpp"

namespace testutil {

/// Series with timestamps 1..n.
inline condcov::ConfoundedSeries make_series(Eigen::MatrixXd outputs, Eigen::VectorXd confounder) {
  condcov::ConfoundedSeries series;
  series.outputs = std::move(outputs);
  series.confounder = std::move(confounder);
  series.timestamps.resize(static_cast<std::size_t>(series.outputs.rows()));
  for (std::size_t i = 0; i < series.timestamps.size(); ++i) {
    series.timestamps[i] = static_cast<std::int64_t>(i) + 1;
  }
  return series;
}

/// Gaussian outputs over a uniform confounder.
inline condcov::ConfoundedSeries random_series(Eigen::Index n, Eigen::Index p,
                                               condcov::rng::Xoshiro256pp& rng, double z_lo = 0.0,
                                               double z_hi = 10.0) {
  Eigen::MatrixXd outputs(n, p);
  Eigen::VectorXd confounder(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    confounder(i) = rng.next_uniform(z_lo, z_hi);
    for (Eigen::Index j = 0; j < p; ++j) outputs(i, j) = rng.next_normal();
  }
  return make_series(std::move(outputs), std::move(confounder));
}

inline double max_rel_err(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want,
                          double floor = 1e-300) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < got.rows(); ++k) {
    for (Eigen::Index l = 0; l < got.cols(); ++l) {
      const double denom = std::max(std::abs(want(k, l)), floor);
      worst = std::max(worst, std::abs(got(k, l) - want(k, l)) / denom);
    }
  }
  return worst;
}

}  // namespace testutil
