#include "condcov/bandwidth.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "condcov/error.hpp"

namespace condcov {

namespace {

ConfoundedSeries take_rows(const ConfoundedSeries& series, Eigen::Index skip_begin,
                           Eigen::Index skip_end) {
  const Eigen::Index n = series.rows();
  const Eigen::Index kept = n - (skip_end - skip_begin);
  ConfoundedSeries out;
  out.outputs.resize(kept, series.channels());
  out.confounder.resize(kept);
  out.timestamps.resize(static_cast<std::size_t>(kept));
  Eigen::Index w = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i >= skip_begin && i < skip_end) continue;
    out.outputs.row(w) = series.outputs.row(i);
    out.confounder(w) = series.confounder(i);
    out.timestamps[static_cast<std::size_t>(w)] = series.timestamps[static_cast<std::size_t>(i)];
    ++w;
  }
  return out;
}

}  // namespace

BandwidthSelection select_bandwidth_cv(const ConfoundedSeries& series,
                                       const std::vector<double>& candidates,
                                       MeanMethod mean_method, int folds, KernelFamily family) {
  require_dense(series);
  if (candidates.empty()) {
    throw Error(Errc::invalid_argument, "bandwidth candidate list is empty");
  }
  for (double h : candidates) {
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw Error(Errc::invalid_argument, "bandwidth candidates must be positive and finite");
    }
  }
  const Eigen::Index n = series.rows();
  if (folds < 2 || folds > n) {
    throw Error(Errc::invalid_argument,
                "fold count must lie in [2, n]; got " + std::to_string(folds));
  }

  const Eigen::Index p = series.channels();
  BandwidthSelection result;
  result.candidates = candidates;
  result.scores.assign(candidates.size(), std::numeric_limits<double>::infinity());
  result.degenerate.assign(candidates.size(), false);

  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const KernelSpec spec{family, candidates[c]};
    double score = 0.0;
    bool failed = false;

    for (int f = 0; f < folds && !failed; ++f) {
      const Eigen::Index begin = n * f / folds;
      const Eigen::Index end = n * (f + 1) / folds;
      if (begin == end) continue;
      const ConfoundedSeries train = take_rows(series, begin, end);

      try {
        const MeanField train_mean{fit_mean_at(train, spec, mean_method, train.confounder),
                                   mean_method, spec.bandwidth};
        const Eigen::MatrixXd heldout_mean =
            fit_mean_at(train, spec, mean_method, series.confounder.segment(begin, end - begin));

        // Predicted covariance at each held-out z, from the training rows.
        const Eigen::MatrixXd train_resid = train.outputs - train_mean.fitted;
        const double floor = weight_floor(train.rows());
        for (Eigen::Index i = begin; i < end; ++i) {
          const double z0 = series.confounder(i);
          double wsum = 0.0;
          Eigen::MatrixXd predicted = Eigen::MatrixXd::Zero(p, p);
          for (Eigen::Index j = 0; j < train.rows(); ++j) {
            const double w = kernel_weight(spec, train.confounder(j) - z0);
            wsum += w;
            predicted.noalias() += w * train_resid.row(j).transpose() * train_resid.row(j);
          }
          if (wsum <= floor) {
            throw Error(Errc::degenerate_weights,
                        "held-out point has no kernel mass at z=" + std::to_string(z0));
          }
          predicted /= wsum;
          const Eigen::VectorXd r =
              (series.outputs.row(i) - heldout_mean.row(i - begin)).transpose();
          score += (r * r.transpose() - predicted).squaredNorm();
        }
      } catch (const Error& err) {
        if (err.code() == Errc::degenerate_weights || err.code() == Errc::singular_local_fit) {
          failed = true;
        } else {
          throw;
        }
      }
    }

    if (!failed) {
      result.scores[c] = score;
    } else {
      result.degenerate[c] = true;
    }
  }

  bool have_choice = false;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (result.degenerate[c]) continue;
    const bool better = result.scores[c] < best_score ||
                        (result.scores[c] == best_score && candidates[c] > result.chosen);
    if (!have_choice || better) {
      have_choice = true;
      best_score = result.scores[c];
      result.chosen = candidates[c];
    }
  }
  if (!have_choice) {
    throw Error(Errc::all_candidates_degenerate,
                "every bandwidth candidate was degenerate on some fold");
  }
  return result;
}

}  // namespace condcov
