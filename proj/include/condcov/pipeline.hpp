#pragma once

#include <optional>
#include <utility>

#include "condcov/band.hpp"
#include "condcov/bootstrap.hpp"
#include "condcov/estimator.hpp"
#include "condcov/series.hpp"

namespace condcov {

struct BandPipelineConfig {
  EstimatorConfig estimator;
  BootstrapConfig bootstrap;
  Eigen::Index grid_points = 100;
  std::optional<std::pair<double, double>> grid_range;  // default: data range
  bool correlation = true;
  BandType band_type = BandType::normal_approx;
  int workers = 1;
  std::size_t cache_budget = kDefaultCacheBudget;
};

struct BandPipelineResult {
  CovarianceField field;  // point estimate
  std::optional<CorrelationResult> correlation;
  BandCollection covariance_bands;
  std::optional<BandCollection> correlation_bands;
  int failed_replicates = 0;
};

/// Point estimate, bootstrap ensemble, and pointwise bands for every matrix
/// entry (k <= l). Covariance bands are always produced; correlation bands
/// additionally, with variance-floor gaps propagated per grid point. The
/// result is a pure function of (series, config).
BandPipelineResult run_band_pipeline(const ConfoundedSeries& series,
                                     const BandPipelineConfig& config);

/// Grid resolution shared by the pipeline and the CLI.
EvaluationGrid resolve_grid(const ConfoundedSeries& series, Eigen::Index points,
                            const std::optional<std::pair<double, double>>& range);

}  // namespace condcov
