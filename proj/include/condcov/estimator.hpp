#pragma once

#include <Eigen/Core>
#include <vector>

#include "condcov/field.hpp"
#include "condcov/kernel.hpp"
#include "condcov/series.hpp"

namespace condcov {

/// A raw kernel weight sum below n * kWeightFloorPerPoint is declared
/// degenerate instead of feeding a numerically explosive division.
inline constexpr double kWeightFloorPerPoint = 1e-12;

inline double weight_floor(Eigen::Index n) {
  return static_cast<double>(n) * kWeightFloorPerPoint;
}

/// Relative threshold on S0*S2 - S1^2 below which a local-linear design is
/// treated as rank deficient.
inline constexpr double kSingularRelTol = 1e-12;

/// Fits the conditional mean of every output column at the series' own
/// confounder values. Nadaraya-Watson is the kernel-weighted local average;
/// local-linear fits a weighted least-squares line at each point and returns
/// the intercept. Throws DegenerateWeights when the weight sum at some z_i
/// falls below the floor and SingularLocalFit for rank-deficient designs.
MeanField estimate_mean(const ConfoundedSeries& series, const KernelSpec& spec, MeanMethod method);

/// Same fits evaluated at arbitrary targets; used by cross-validation.
Eigen::MatrixXd fit_mean_at(const ConfoundedSeries& data, const KernelSpec& spec, MeanMethod method,
                            const Eigen::VectorXd& targets);

/// Kernel-weighted average of residual outer products on the grid:
///
///   S(z_g) = sum_i K_h(z_i - z_g) r_i r_i^T / sum_i K_h(z_i - z_g),
///   r_i = x_i - m(z_i).
///
/// Symmetric and positive semidefinite by construction. Throws
/// DegenerateWeights naming the grid point whose weight sum is below the
/// floor so callers can shrink the grid or raise h.
CovarianceField estimate_conditional_covariance(const ConfoundedSeries& series,
                                                const MeanField& mean, const KernelSpec& spec,
                                                const EvaluationGrid& grid);

/// A correlation entry whose variance fell below the floor at a grid point;
/// reported as a gap instead of an unbounded ratio.
struct VarianceGap {
  Eigen::Index grid_index;  // 0-based
  Eigen::Index channel;     // 0-based
};

struct CorrelationResult {
  CovarianceField field;          // kind == correlation
  std::vector<VarianceGap> gaps;  // entries zeroed in `field`, flagged here
};

/// r_kl(z) = s_kl(z) / sqrt(s_kk(z) s_ll(z)) with the diagonal pinned to 1.
/// Channels whose variance at a grid point is at or below
/// 1e-12 * max_g s_kk(z_g) are flagged as gaps; their off-diagonal entries
/// are zeroed and must be treated as undefined by consumers.
CorrelationResult covariance_to_correlation(const CovarianceField& field);

/// Rebuilds covariances from correlations and per-grid-point variances
/// (variances[g](k) = s_kk(z_g)).
CovarianceField correlation_to_covariance(const CovarianceField& corr,
                                          const std::vector<Eigen::VectorXd>& variances);

}  // namespace condcov
