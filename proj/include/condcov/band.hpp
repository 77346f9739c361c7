#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "condcov/field.hpp"
#include "condcov/series.hpp"

namespace condcov {

enum class BandType { normal_approx, percentile };

const char* to_string(BandType type);
BandType band_type_from_string(const std::string& name);

/// Pointwise confidence band for one scalar statistic over the grid. The
/// default construction is the symmetric normal-approximation band
/// estimate +- q_{1-alpha/2} * boot_sd centered at the original-series
/// point estimate. Points with `valid[g] == false` are gaps (for example an
/// ill-defined correlation) and carry no interval.
struct ConfidenceBand {
  EvaluationGrid grid;
  Eigen::VectorXd estimate;
  Eigen::VectorXd boot_sd;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<bool> valid;
  double alpha = 0.05;
  int replicates = 0;
  BandType type = BandType::normal_approx;
};

/// Checks lower <= estimate <= upper and, for normal-approximation bands,
/// symmetry about the estimate to 1e-12, at every valid point.
void validate_band(const ConfidenceBand& band);

/// Bands for a set of matrix entries (k <= l, 0-based in memory, 1-based in
/// every export), plus the run metadata echoed into files.
struct BandCollection {
  struct Entry {
    Eigen::Index k = 0;
    Eigen::Index l = 0;
    ConfidenceBand band;
  };

  EvaluationGrid grid;
  std::vector<Entry> entries;
  FieldKind statistic = FieldKind::covariance;

  struct Metadata {
    double bandwidth = 0.0;
    int replicates = 0;
    int failed_replicates = 0;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    std::string mode;  // disjoint | moving
    std::string software_version;
  } meta;
};

}  // namespace condcov
