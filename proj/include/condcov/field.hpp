#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "condcov/series.hpp"

namespace condcov {

enum class FieldKind { covariance, correlation };

enum class MeanMethod { nadaraya_watson, local_linear };

const char* to_string(FieldKind kind);
const char* to_string(MeanMethod method);
FieldKind field_kind_from_string(const std::string& name);
MeanMethod mean_method_from_string(const std::string& name);

/// Conditional second-moment matrices evaluated on a confounder grid:
/// one symmetric p x p matrix per grid point.
struct CovarianceField {
  EvaluationGrid grid;
  std::vector<Eigen::MatrixXd> matrices;
  double bandwidth = 0.0;
  FieldKind kind = FieldKind::covariance;

  Eigen::Index size() const { return static_cast<Eigen::Index>(matrices.size()); }
  Eigen::Index channels() const { return matrices.empty() ? 0 : matrices.front().rows(); }
};

/// Fitted conditional mean values m(z_i) aligned with the series rows the
/// fit was produced from.
struct MeanField {
  Eigen::MatrixXd fitted;  // n x p
  MeanMethod method = MeanMethod::nadaraya_watson;
  double bandwidth = 0.0;
};

/// Checks symmetry to 1e-12 absolute, positive semidefiniteness for
/// covariance fields (min eigenvalue >= -1e-10 * trace), and unit diagonal
/// plus |r| <= 1 + 1e-12 for correlation fields. Throws InvalidArgument
/// with the offending grid point on violation.
void validate_field(const CovarianceField& field);

/// Extracts the per-grid-point value of entry (k, l), 0-based.
Eigen::VectorXd field_entry(const CovarianceField& field, Eigen::Index k, Eigen::Index l);

}  // namespace condcov
