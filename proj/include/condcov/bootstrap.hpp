#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "condcov/band.hpp"
#include "condcov/block_plan.hpp"
#include "condcov/estimator.hpp"
#include "condcov/rng.hpp"
#include "condcov/series.hpp"

namespace condcov {

struct BootstrapConfig {
  BlockMode mode = BlockMode::disjoint;
  BlockSpan span = BlockSpan::calendar_day();
  int replicates = 100;   // kappa
  double alpha = 0.05;
  std::uint64_t seed = 0;
};

void validate_bootstrap_config(const BootstrapConfig& config);

/// Kernel and mean settings shared by the point estimate and every
/// bootstrap replicate. The same bandwidth drives both by default; callers
/// may decouple them.
struct EstimatorConfig {
  KernelSpec cov_kernel{KernelFamily::gaussian, 1.0};
  KernelSpec mean_kernel{KernelFamily::gaussian, 1.0};
  MeanMethod mean_method = MeanMethod::nadaraya_watson;
};

/// Uniform block draws until at least `target_rows` rows are accumulated
/// (the expected draw count is ceil(n / mean block length) + 1); the caller
/// truncates to exactly `target_rows`.
std::vector<Eigen::Index> draw_block_sequence(const BlockPlan& plan, Eigen::Index target_rows,
                                              rng::Xoshiro256pp& rng);

/// Draws blocks with replacement and concatenates their (z, x) row pairs in
/// draw order, truncated to exactly n rows. Timestamps are reindexed 1..n;
/// the original calendar is not meaningful after resampling.
ConfoundedSeries resample_series(const ConfoundedSeries& series, const BlockPlan& plan,
                                 rng::Xoshiro256pp& rng);

struct ReplicateFailure {
  int replicate = 0;  // 0-based
  std::string reason;
};

struct EnsembleResult {
  std::vector<CovarianceField> fields;  // successful replicates, ascending id
  std::vector<int> replicate_ids;
  std::vector<ReplicateFailure> failures;
};

inline constexpr std::size_t kDefaultCacheBudget = std::size_t{1} << 30;  // 1 GiB

/// Precomputed state for replicate evaluation over one (series, estimator,
/// grid) triple. When the kernel matrices over the original rows fit in
/// `cache_budget` bytes, replicates are evaluated against these shared
/// matrices using the block multiplicities of each draw (the estimator is a
/// weighted sum over the resampled multiset, so this yields the same
/// statistic up to summation order); otherwise each replicate materializes
/// its resample and runs the plain estimator. The workspace only references
/// its inputs; they must outlive it.
class EnsembleWorkspace {
 public:
  EnsembleWorkspace(const ConfoundedSeries& series, const EstimatorConfig& estimator,
                    const EvaluationGrid& grid, std::size_t cache_budget = kDefaultCacheBudget);

  bool cached() const { return cached_; }
  const ConfoundedSeries& series() const { return *series_; }
  const EstimatorConfig& estimator() const { return estimator_; }
  const EvaluationGrid& grid() const { return *grid_; }

  // Kernel matrices over the original rows (empty when not cached):
  // w0(i, j) = K_mean(z_j - z_i); w1, w2 carry the first and second powers
  // of (z_j - z_i) for local-linear fits; wg(g, i) = K_cov(z_i - z_g).
  const Eigen::MatrixXd& w0() const { return w0_; }
  const Eigen::MatrixXd& w1() const { return w1_; }
  const Eigen::MatrixXd& w2() const { return w2_; }
  const Eigen::MatrixXd& wg() const { return wg_; }

 private:
  const ConfoundedSeries* series_;
  EstimatorConfig estimator_;
  const EvaluationGrid* grid_;
  bool cached_ = false;
  Eigen::MatrixXd w0_, w1_, w2_, wg_;
};

/// Runs `replicates` bootstrap replicates: resample, re-fit the conditional
/// mean on the resampled rows, evaluate the covariance field on the fixed
/// grid. Each replicate draws from its own substream keyed by (seed,
/// replicate index), so the ensemble is identical for any worker count and
/// execution order. `on_field` is invoked in ascending replicate order.
///
/// Degenerate replicates (weight sum under the floor at some grid point, or
/// a singular local-linear fit) are skipped and recorded in `failures`;
/// TooManyFailures is thrown when more than half of the replicates fail.
void run_ensemble(const EnsembleWorkspace& workspace, const BlockPlan& plan, int replicates,
                  std::uint64_t seed,
                  const std::function<void(int, const CovarianceField&)>& on_field,
                  std::vector<ReplicateFailure>& failures, int workers = 1);

/// Collecting wrapper around run_ensemble.
EnsembleResult bootstrap_ensemble(const ConfoundedSeries& series, const BlockPlan& plan,
                                  const EstimatorConfig& estimator, const EvaluationGrid& grid,
                                  int replicates, std::uint64_t seed, int workers = 1,
                                  std::size_t cache_budget = kDefaultCacheBudget);

/// Normal-approximation pointwise band: boot_sd is the empirical standard
/// deviation (kappa - 1 divisor) of the replicate values at each grid point
/// and the interval is estimate -+ q_{1-alpha/2} boot_sd, centered at the
/// original-series point estimate. Throws InsufficientReplicates when fewer
/// than two finite replicate values survive at a grid point.
ConfidenceBand confidence_band(const EvaluationGrid& grid, const Eigen::VectorXd& estimate,
                               const std::vector<Eigen::VectorXd>& replicate_values, double alpha);

/// Equal-tailed percentile alternative (not the default construction).
ConfidenceBand percentile_band(const EvaluationGrid& grid, const Eigen::VectorXd& estimate,
                               const std::vector<Eigen::VectorXd>& replicate_values, double alpha);

struct CoverageResult {
  Eigen::VectorXd per_grid;  // fraction of bands containing the truth
  double average = 0.0;
};

/// Fraction of bands containing the truth at each grid point, and the mean
/// over grid points. All bands must share one grid (GridMismatch otherwise);
/// gap points are excluded from both numerator and denominator.
CoverageResult coverage_rate(const std::vector<ConfidenceBand>& bands, const Eigen::VectorXd& truth);

}  // namespace condcov
