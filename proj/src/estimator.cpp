#include "condcov/estimator.hpp"

#include <cmath>
#include <string>

#include "condcov/error.hpp"

namespace condcov {

namespace {

std::string format_z(double z) { return "z=" + std::to_string(z); }

void check_mean_alignment(const ConfoundedSeries& series, const MeanField& mean) {
  if (mean.fitted.rows() != series.rows() || mean.fitted.cols() != series.channels()) {
    throw Error(Errc::invalid_argument, "mean field shape does not match the series it is used with");
  }
  if (!mean.fitted.allFinite()) {
    throw Error(Errc::non_finite_value, "mean field contains non-finite values");
  }
}

}  // namespace

const char* to_string(KernelFamily family) {
  return family == KernelFamily::gaussian ? "gaussian" : "epanechnikov";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "epanechnikov") return KernelFamily::epanechnikov;
  throw Error(Errc::invalid_argument, "unknown kernel family '" + name + "'");
}

void validate_kernel(const KernelSpec& spec) {
  if (!(spec.bandwidth > 0.0) || !std::isfinite(spec.bandwidth)) {
    throw Error(Errc::invalid_argument, "kernel bandwidth must be positive and finite");
  }
}

Eigen::MatrixXd fit_mean_at(const ConfoundedSeries& data, const KernelSpec& spec, MeanMethod method,
                            const Eigen::VectorXd& targets) {
  validate_kernel(spec);
  require_dense(data);
  const Eigen::Index n = data.rows();
  const Eigen::Index p = data.channels();
  const double floor = weight_floor(n);

  Eigen::MatrixXd fitted(targets.size(), p);
  Eigen::VectorXd t0(p), t1(p);

  for (Eigen::Index t = 0; t < targets.size(); ++t) {
    const double z0 = targets(t);
    if (method == MeanMethod::nadaraya_watson) {
      double s0 = 0.0;
      t0.setZero();
      for (Eigen::Index j = 0; j < n; ++j) {
        const double w = kernel_weight(spec, data.confounder(j) - z0);
        s0 += w;
        t0 += w * data.outputs.row(j).transpose();
      }
      if (s0 <= floor) {
        throw Error(Errc::degenerate_weights,
                    "mean weight sum below floor at " + format_z(z0) + "; increase the bandwidth");
      }
      fitted.row(t) = (t0 / s0).transpose();
    } else {
      double s0 = 0.0, s1 = 0.0, s2 = 0.0;
      t0.setZero();
      t1.setZero();
      for (Eigen::Index j = 0; j < n; ++j) {
        const double d = data.confounder(j) - z0;
        const double w = kernel_weight(spec, d);
        s0 += w;
        s1 += w * d;
        s2 += w * d * d;
        t0 += w * data.outputs.row(j).transpose();
        t1 += (w * d) * data.outputs.row(j).transpose();
      }
      if (s0 <= floor) {
        throw Error(Errc::degenerate_weights,
                    "mean weight sum below floor at " + format_z(z0) + "; increase the bandwidth");
      }
      const double denom = s0 * s2 - s1 * s1;
      if (denom <= kSingularRelTol * s0 * s2) {
        throw Error(Errc::singular_local_fit,
                    "local-linear design is rank deficient at " + format_z(z0));
      }
      fitted.row(t) = ((s2 * t0 - s1 * t1) / denom).transpose();
    }
  }
  return fitted;
}

MeanField estimate_mean(const ConfoundedSeries& series, const KernelSpec& spec, MeanMethod method) {
  MeanField mean;
  mean.fitted = fit_mean_at(series, spec, method, series.confounder);
  mean.method = method;
  mean.bandwidth = spec.bandwidth;
  return mean;
}

CovarianceField estimate_conditional_covariance(const ConfoundedSeries& series,
                                                const MeanField& mean, const KernelSpec& spec,
                                                const EvaluationGrid& grid) {
  validate_kernel(spec);
  require_dense(series);
  validate_grid(grid);
  check_mean_alignment(series, mean);

  const Eigen::Index n = series.rows();
  const Eigen::Index p = series.channels();
  const double floor = weight_floor(n);

  const Eigen::MatrixXd residuals = series.outputs - mean.fitted;

  CovarianceField field;
  field.grid = grid;
  field.bandwidth = spec.bandwidth;
  field.kind = FieldKind::covariance;
  field.matrices.resize(static_cast<std::size_t>(grid.size()));

  Eigen::VectorXd weights(n);
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    const double z0 = grid.points(g);
    double wsum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      weights(i) = kernel_weight(spec, series.confounder(i) - z0);
      wsum += weights(i);
    }
    if (wsum <= floor) {
      throw Error(Errc::degenerate_weights, "covariance weight sum below floor at grid point " +
                                                std::to_string(g + 1) + " (" + format_z(z0) +
                                                "); shrink the grid or increase the bandwidth");
    }
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
      const auto rk = residuals.col(k).array();
      for (Eigen::Index l = k; l < p; ++l) {
        acc(k, l) = (weights.array() * rk * residuals.col(l).array()).sum();
      }
    }
    acc /= wsum;
    // Mirror the upper triangle so symmetry is exact by construction.
    for (Eigen::Index k = 0; k < p; ++k) {
      for (Eigen::Index l = 0; l < k; ++l) acc(k, l) = acc(l, k);
    }
    field.matrices[static_cast<std::size_t>(g)] = std::move(acc);
  }
  return field;
}

CorrelationResult covariance_to_correlation(const CovarianceField& field) {
  if (field.kind != FieldKind::covariance) {
    throw Error(Errc::invalid_argument, "correlation conversion needs a covariance field");
  }
  const Eigen::Index p = field.channels();
  const Eigen::Index G = field.size();

  Eigen::VectorXd max_variance = Eigen::VectorXd::Zero(p);
  for (Eigen::Index g = 0; g < G; ++g) {
    for (Eigen::Index k = 0; k < p; ++k) {
      const double v = field.matrices[static_cast<std::size_t>(g)](k, k);
      if (v < -1e-10 * field.matrices[static_cast<std::size_t>(g)].trace()) {
        throw Error(Errc::invalid_argument, "negative variance at grid point " + std::to_string(g + 1));
      }
      max_variance(k) = std::max(max_variance(k), v);
    }
  }

  CorrelationResult result;
  result.field.grid = field.grid;
  result.field.bandwidth = field.bandwidth;
  result.field.kind = FieldKind::correlation;
  result.field.matrices.resize(static_cast<std::size_t>(G));

  for (Eigen::Index g = 0; g < G; ++g) {
    const Eigen::MatrixXd& cov = field.matrices[static_cast<std::size_t>(g)];
    Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(p, p);
    std::vector<bool> gapped(static_cast<std::size_t>(p), false);
    for (Eigen::Index k = 0; k < p; ++k) {
      corr(k, k) = 1.0;
      if (cov(k, k) <= 1e-12 * max_variance(k)) {
        gapped[static_cast<std::size_t>(k)] = true;
        result.gaps.push_back({g, k});
      }
    }
    for (Eigen::Index k = 0; k < p; ++k) {
      for (Eigen::Index l = k + 1; l < p; ++l) {
        if (gapped[static_cast<std::size_t>(k)] || gapped[static_cast<std::size_t>(l)]) continue;
        const double r = cov(k, l) / std::sqrt(cov(k, k) * cov(l, l));
        corr(k, l) = r;
        corr(l, k) = r;
      }
    }
    result.field.matrices[static_cast<std::size_t>(g)] = std::move(corr);
  }
  return result;
}

CovarianceField correlation_to_covariance(const CovarianceField& corr,
                                          const std::vector<Eigen::VectorXd>& variances) {
  if (corr.kind != FieldKind::correlation) {
    throw Error(Errc::invalid_argument, "covariance reconstruction needs a correlation field");
  }
  if (static_cast<Eigen::Index>(variances.size()) != corr.size()) {
    throw Error(Errc::invalid_argument, "variance list length does not match the grid");
  }
  CovarianceField field;
  field.grid = corr.grid;
  field.bandwidth = corr.bandwidth;
  field.kind = FieldKind::covariance;
  field.matrices.resize(static_cast<std::size_t>(corr.size()));
  const Eigen::Index p = corr.channels();
  for (Eigen::Index g = 0; g < corr.size(); ++g) {
    const Eigen::VectorXd& v = variances[static_cast<std::size_t>(g)];
    if (v.size() != p) throw Error(Errc::invalid_argument, "variance vector has wrong length");
    Eigen::MatrixXd cov(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
      cov(k, k) = v(k);
      for (Eigen::Index l = k + 1; l < p; ++l) {
        const double c = corr.matrices[static_cast<std::size_t>(g)](k, l) * std::sqrt(v(k) * v(l));
        cov(k, l) = c;
        cov(l, k) = c;
      }
    }
    field.matrices[static_cast<std::size_t>(g)] = std::move(cov);
  }
  return field;
}

}  // namespace condcov
