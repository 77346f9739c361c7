#include "condcov/series.hpp"

#include <cmath>
#include <string>

#include "condcov/error.hpp"

namespace condcov {

const ConfoundedSeries& validate_series(const ConfoundedSeries& series) {
  const Eigen::Index n = series.outputs.rows();
  if (n < 1) throw Error(Errc::mismatched_lengths, "series must contain at least one row");
  if (series.confounder.size() != n) {
    throw Error(Errc::mismatched_lengths,
                "outputs have " + std::to_string(n) + " rows but confounder has " +
                    std::to_string(series.confounder.size()) + " values");
  }
  if (static_cast<Eigen::Index>(series.timestamps.size()) != n) {
    throw Error(Errc::mismatched_lengths,
                "outputs have " + std::to_string(n) + " rows but there are " +
                    std::to_string(series.timestamps.size()) + " timestamps");
  }
  if (series.outputs.cols() < 1) {
    throw Error(Errc::mismatched_lengths, "series must contain at least one output column");
  }
  if (series.missing) {
    if (series.missing->outputs.rows() != n || series.missing->outputs.cols() != series.outputs.cols() ||
        series.missing->confounder.size() != n) {
      throw Error(Errc::mismatched_lengths, "missing mask shape does not match the series");
    }
  }

  for (Eigen::Index i = 1; i < n; ++i) {
    if (series.timestamps[i] <= series.timestamps[i - 1]) {
      throw Error(Errc::non_monotone_time,
                  "timestamps must be strictly increasing; violated at row " + std::to_string(i + 1));
    }
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const bool conf_masked = series.missing && series.missing->confounder(i);
    if (!conf_masked && !std::isfinite(series.confounder(i))) {
      throw Error(Errc::non_finite_value,
                  "confounder is not finite at row " + std::to_string(i + 1));
    }
    for (Eigen::Index j = 0; j < series.outputs.cols(); ++j) {
      const bool masked = series.missing && series.missing->outputs(i, j);
      if (!masked && !std::isfinite(series.outputs(i, j))) {
        throw Error(Errc::non_finite_value, "output is not finite at row " + std::to_string(i + 1) +
                                                ", column " + std::to_string(j + 1));
      }
    }
  }
  return series;
}

const ConfoundedSeries& require_dense(const ConfoundedSeries& series) {
  validate_series(series);
  if (series.missing && series.missing->any()) {
    for (Eigen::Index i = 0; i < series.rows(); ++i) {
      if (series.missing->confounder(i)) {
        throw Error(Errc::non_finite_value,
                    "confounder still missing at row " + std::to_string(i + 1) +
                        "; fill gaps before estimation");
      }
      for (Eigen::Index j = 0; j < series.channels(); ++j) {
        if (series.missing->outputs(i, j)) {
          throw Error(Errc::non_finite_value,
                      "output still missing at row " + std::to_string(i + 1) + ", column " +
                          std::to_string(j + 1) + "; fill gaps before estimation");
        }
      }
    }
  }
  return series;
}

void validate_grid(const EvaluationGrid& grid) {
  if (grid.points.size() < 1) throw Error(Errc::invalid_argument, "grid must contain at least one point");
  for (Eigen::Index g = 0; g < grid.points.size(); ++g) {
    if (!std::isfinite(grid.points(g))) {
      throw Error(Errc::invalid_argument, "grid point " + std::to_string(g + 1) + " is not finite");
    }
    if (g > 0 && grid.points(g) <= grid.points(g - 1)) {
      throw Error(Errc::invalid_argument, "grid points must be strictly increasing");
    }
  }
}

EvaluationGrid make_linear_grid(double lo, double hi, Eigen::Index count) {
  if (count < 1) throw Error(Errc::invalid_argument, "grid needs at least one point");
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(Errc::invalid_argument, "grid range must be finite with lo <= hi");
  }
  EvaluationGrid grid;
  grid.points.resize(count);
  if (count == 1) {
    grid.points(0) = lo;
  } else {
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (Eigen::Index g = 0; g < count; ++g) grid.points(g) = lo + step * static_cast<double>(g);
    grid.points(count - 1) = hi;
  }
  validate_grid(grid);
  return grid;
}

EvaluationGrid default_grid(const ConfoundedSeries& series, Eigen::Index count) {
  require_dense(series);
  const double lo = series.confounder.minCoeff();
  const double hi = series.confounder.maxCoeff();
  // A constant confounder collapses the grid to the single observed value.
  if (lo == hi) return make_linear_grid(lo, hi, 1);
  return make_linear_grid(lo, hi, count);
}

}  // namespace condcov
