#include "condcov/field.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "condcov/error.hpp"

namespace condcov {

const char* to_string(FieldKind kind) {
  return kind == FieldKind::covariance ? "covariance" : "correlation";
}

const char* to_string(MeanMethod method) {
  return method == MeanMethod::nadaraya_watson ? "nadaraya-watson" : "local-linear";
}

FieldKind field_kind_from_string(const std::string& name) {
  if (name == "covariance") return FieldKind::covariance;
  if (name == "correlation") return FieldKind::correlation;
  throw Error(Errc::invalid_argument, "unknown field kind '" + name + "'");
}

MeanMethod mean_method_from_string(const std::string& name) {
  if (name == "nadaraya-watson" || name == "nw") return MeanMethod::nadaraya_watson;
  if (name == "local-linear" || name == "ll") return MeanMethod::local_linear;
  throw Error(Errc::invalid_argument, "unknown mean method '" + name + "'");
}

void validate_field(const CovarianceField& field) {
  validate_grid(field.grid);
  if (field.size() != field.grid.size()) {
    throw Error(Errc::invalid_argument, "field has a matrix count different from its grid size");
  }
  if (!(field.bandwidth > 0.0) || !std::isfinite(field.bandwidth)) {
    throw Error(Errc::invalid_argument, "field bandwidth must be positive and finite");
  }
  const Eigen::Index p = field.channels();
  for (Eigen::Index g = 0; g < field.size(); ++g) {
    const Eigen::MatrixXd& m = field.matrices[g];
    if (m.rows() != p || m.cols() != p) {
      throw Error(Errc::invalid_argument,
                  "matrix at grid point " + std::to_string(g + 1) + " is not p x p");
    }
    if (!m.allFinite()) {
      throw Error(Errc::non_finite_value,
                  "matrix at grid point " + std::to_string(g + 1) + " has non-finite entries");
    }
    const double sym_err = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (sym_err > 1e-12) {
      throw Error(Errc::invalid_argument, "matrix at grid point " + std::to_string(g + 1) +
                                              " breaks symmetry by " + std::to_string(sym_err));
    }
    if (field.kind == FieldKind::covariance) {
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
      const double min_eig = eig.eigenvalues().minCoeff();
      if (min_eig < -1e-10 * m.trace()) {
        throw Error(Errc::invalid_argument, "matrix at grid point " + std::to_string(g + 1) +
                                                " is not positive semidefinite");
      }
    } else {
      for (Eigen::Index k = 0; k < p; ++k) {
        if (std::abs(m(k, k) - 1.0) > 1e-12) {
          throw Error(Errc::invalid_argument, "correlation diagonal differs from 1 at grid point " +
                                                  std::to_string(g + 1));
        }
        for (Eigen::Index l = 0; l < p; ++l) {
          if (std::abs(m(k, l)) > 1.0 + 1e-12) {
            throw Error(Errc::invalid_argument,
                        "correlation exceeds 1 in magnitude at grid point " + std::to_string(g + 1));
          }
        }
      }
    }
  }
}

Eigen::VectorXd field_entry(const CovarianceField& field, Eigen::Index k, Eigen::Index l) {
  Eigen::VectorXd values(field.size());
  for (Eigen::Index g = 0; g < field.size(); ++g) values(g) = field.matrices[g](k, l);
  return values;
}

}  // namespace condcov
