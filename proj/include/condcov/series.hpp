#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

namespace condcov {

/// Per-cell missing markers carried between ingestion and interpolation.
/// Estimation-stage series are dense; see require_dense().
struct MissingMask {
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> outputs;  // n x p
  Eigen::Array<bool, Eigen::Dynamic, 1> confounder;            // n

  bool any() const { return outputs.any() || confounder.any(); }
};

/// n timestamped p-dimensional observations paired with a scalar confounder.
/// Rows are ordered by strictly increasing timestamp. Immutable by
/// convention once built; safe to share by const reference across workers.
struct ConfoundedSeries {
  std::vector<std::int64_t> timestamps;  // seconds since epoch
  Eigen::MatrixXd outputs;               // n x p
  Eigen::VectorXd confounder;            // n
  std::optional<MissingMask> missing;

  Eigen::Index rows() const { return outputs.rows(); }
  Eigen::Index channels() const { return outputs.cols(); }
};

/// Strictly increasing confounder values at which fields are evaluated.
struct EvaluationGrid {
  Eigen::VectorXd points;

  Eigen::Index size() const { return points.size(); }
};

/// Returns the series unchanged if all structural invariants hold
/// (matching lengths, strictly increasing timestamps, finite unmasked
/// cells); throws MismatchedLengths, NonMonotoneTime, or NonFiniteValue
/// otherwise. Error locations are reported 1-based.
const ConfoundedSeries& validate_series(const ConfoundedSeries& series);

/// Throws NonFiniteValue unless the series is fully dense and finite, i.e.
/// any missing mask is all-false and every cell is a finite double.
/// Estimation entry points call this so kernel sums never see NaNs.
const ConfoundedSeries& require_dense(const ConfoundedSeries& series);

void validate_grid(const EvaluationGrid& grid);

/// G equally spaced points covering [lo, hi]; G == 1 yields {lo}.
EvaluationGrid make_linear_grid(double lo, double hi, Eigen::Index count);

/// Default evaluation grid: G points spanning [min z_i, max z_i].
EvaluationGrid default_grid(const ConfoundedSeries& series, Eigen::Index count = 100);

}  // namespace condcov
