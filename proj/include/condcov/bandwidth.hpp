#pragma once

#include <vector>

#include "condcov/estimator.hpp"

namespace condcov {

struct BandwidthSelection {
  double chosen = 0.0;
  std::vector<double> candidates;
  std::vector<double> scores;      // +inf for degenerate candidates
  std::vector<bool> degenerate;
};

/// K-fold cross-validation over bandwidth candidates. Folds are contiguous
/// index ranges (time-ordered data). For each held-out observation i the
/// score adds the squared Frobenius distance between the held-out residual
/// outer product and the covariance predicted at z_i from the retained
/// folds:
///
///   score(h) = sum_i || r_i r_i^T - S_{-f(i)}(z_i; h) ||_F^2 .
///
/// Ties are broken toward the larger bandwidth (smoother field). A
/// candidate that triggers DegenerateWeights or SingularLocalFit on any
/// fold is excluded; if every candidate is excluded,
/// AllCandidatesDegenerate is thrown.
BandwidthSelection select_bandwidth_cv(const ConfoundedSeries& series,
                                       const std::vector<double>& candidates,
                                       MeanMethod mean_method, int folds,
                                       KernelFamily family = KernelFamily::gaussian);

}  // namespace condcov
