#include "condcov/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "condcov/error.hpp"
#include "condcov/normal.hpp"
#include "condcov/version.hpp"

namespace condcov {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct EntryIndex {
  Eigen::Index k, l;
};

std::vector<EntryIndex> upper_entries(Eigen::Index p) {
  std::vector<EntryIndex> entries;
  for (Eigen::Index k = 0; k < p; ++k) {
    for (Eigen::Index l = k; l < p; ++l) entries.push_back({k, l});
  }
  return entries;
}

}  // namespace

EvaluationGrid resolve_grid(const ConfoundedSeries& series, Eigen::Index points,
                            const std::optional<std::pair<double, double>>& range) {
  if (range) {
    if (!(range->first < range->second)) {
      throw Error(Errc::invalid_argument, "grid range needs min < max");
    }
    return make_linear_grid(range->first, range->second, points);
  }
  return default_grid(series, points);
}

BandPipelineResult run_band_pipeline(const ConfoundedSeries& series,
                                     const BandPipelineConfig& config) {
  require_dense(series);
  validate_bootstrap_config(config.bootstrap);

  const EvaluationGrid grid = resolve_grid(series, config.grid_points, config.grid_range);
  const Eigen::Index G = grid.size();
  const Eigen::Index p = series.channels();
  const std::vector<EntryIndex> entries = upper_entries(p);
  const std::size_t E = entries.size();

  BandPipelineResult result;
  const MeanField mean =
      estimate_mean(series, config.estimator.mean_kernel, config.estimator.mean_method);
  result.field = estimate_conditional_covariance(series, mean, config.estimator.cov_kernel, grid);
  if (config.correlation) {
    result.correlation = covariance_to_correlation(result.field);
  }

  const BlockPlan plan = build_block_plan(series, config.bootstrap.mode, config.bootstrap.span);
  const EnsembleWorkspace workspace(series, config.estimator, grid, config.cache_budget);

  // Point estimates per entry, with correlation gaps marked invalid.
  Eigen::MatrixXd cov_point(G, static_cast<Eigen::Index>(E));
  Eigen::MatrixXd corr_point(G, static_cast<Eigen::Index>(E));
  std::vector<std::vector<bool>> corr_point_valid(E, std::vector<bool>(static_cast<std::size_t>(G), true));
  for (std::size_t e = 0; e < E; ++e) {
    for (Eigen::Index g = 0; g < G; ++g) {
      cov_point(g, static_cast<Eigen::Index>(e)) =
          result.field.matrices[static_cast<std::size_t>(g)](entries[e].k, entries[e].l);
    }
  }
  if (config.correlation) {
    std::vector<std::vector<bool>> channel_gap(static_cast<std::size_t>(p),
                                               std::vector<bool>(static_cast<std::size_t>(G), false));
    for (const auto& gap : result.correlation->gaps) {
      channel_gap[static_cast<std::size_t>(gap.channel)][static_cast<std::size_t>(gap.grid_index)] =
          true;
    }
    for (std::size_t e = 0; e < E; ++e) {
      for (Eigen::Index g = 0; g < G; ++g) {
        const bool gapped = channel_gap[static_cast<std::size_t>(entries[e].k)][static_cast<std::size_t>(g)] ||
                            channel_gap[static_cast<std::size_t>(entries[e].l)][static_cast<std::size_t>(g)];
        corr_point_valid[e][static_cast<std::size_t>(g)] = !gapped;
        corr_point(g, static_cast<Eigen::Index>(e)) =
            gapped ? kNaN
                   : result.correlation->field.matrices[static_cast<std::size_t>(g)](entries[e].k,
                                                                                     entries[e].l);
      }
    }
  }

  // Streaming centered moments per entry and grid point.
  Eigen::MatrixXd cov_sum = Eigen::MatrixXd::Zero(G, static_cast<Eigen::Index>(E));
  Eigen::MatrixXd cov_sumsq = Eigen::MatrixXd::Zero(G, static_cast<Eigen::Index>(E));
  std::int64_t cov_count = 0;
  Eigen::MatrixXd corr_sum = Eigen::MatrixXd::Zero(G, static_cast<Eigen::Index>(E));
  Eigen::MatrixXd corr_sumsq = Eigen::MatrixXd::Zero(G, static_cast<Eigen::Index>(E));
  Eigen::MatrixXi corr_count = Eigen::MatrixXi::Zero(G, static_cast<Eigen::Index>(E));

  // Percentile bands need the raw replicate values.
  const bool store_values = config.band_type == BandType::percentile;
  std::vector<Eigen::MatrixXd> cov_values;
  std::vector<Eigen::MatrixXd> corr_values;
  if (store_values) {
    const std::size_t bytes = static_cast<std::size_t>(config.bootstrap.replicates) *
                              static_cast<std::size_t>(G) * E * sizeof(double) *
                              (config.correlation ? 2 : 1);
    if (bytes > config.cache_budget) {
      throw Error(Errc::invalid_argument,
                  "percentile bands at this replicate count exceed the memory budget; "
                  "use the normal-approximation band");
    }
  }

  std::vector<ReplicateFailure> failures;
  run_ensemble(
      workspace, plan, config.bootstrap.replicates, config.bootstrap.seed,
      [&](int, const CovarianceField& field) {
        ++cov_count;
        Eigen::MatrixXd rep_cov(G, static_cast<Eigen::Index>(E));
        for (std::size_t e = 0; e < E; ++e) {
          for (Eigen::Index g = 0; g < G; ++g) {
            const double value =
                field.matrices[static_cast<std::size_t>(g)](entries[e].k, entries[e].l);
            rep_cov(g, static_cast<Eigen::Index>(e)) = value;
            const double d = value - cov_point(g, static_cast<Eigen::Index>(e));
            cov_sum(g, static_cast<Eigen::Index>(e)) += d;
            cov_sumsq(g, static_cast<Eigen::Index>(e)) += d * d;
          }
        }
        if (store_values) cov_values.push_back(rep_cov);

        if (config.correlation) {
          const CorrelationResult rep_corr = covariance_to_correlation(field);
          std::vector<std::vector<bool>> rep_gap(
              static_cast<std::size_t>(p), std::vector<bool>(static_cast<std::size_t>(G), false));
          for (const auto& gap : rep_corr.gaps) {
            rep_gap[static_cast<std::size_t>(gap.channel)][static_cast<std::size_t>(gap.grid_index)] =
                true;
          }
          Eigen::MatrixXd rep_vals =
              Eigen::MatrixXd::Constant(G, static_cast<Eigen::Index>(E), kNaN);
          for (std::size_t e = 0; e < E; ++e) {
            for (Eigen::Index g = 0; g < G; ++g) {
              if (!corr_point_valid[e][static_cast<std::size_t>(g)]) continue;
              if (rep_gap[static_cast<std::size_t>(entries[e].k)][static_cast<std::size_t>(g)] ||
                  rep_gap[static_cast<std::size_t>(entries[e].l)][static_cast<std::size_t>(g)]) {
                continue;
              }
              const double value =
                  rep_corr.field.matrices[static_cast<std::size_t>(g)](entries[e].k, entries[e].l);
              rep_vals(g, static_cast<Eigen::Index>(e)) = value;
              const double d = value - corr_point(g, static_cast<Eigen::Index>(e));
              corr_sum(g, static_cast<Eigen::Index>(e)) += d;
              corr_sumsq(g, static_cast<Eigen::Index>(e)) += d * d;
              corr_count(g, static_cast<Eigen::Index>(e)) += 1;
            }
          }
          if (store_values) corr_values.push_back(rep_vals);
        }
      },
      failures, config.workers);

  result.failed_replicates = static_cast<int>(failures.size());
  if (cov_count < 2) {
    throw Error(Errc::insufficient_replicates,
                "fewer than 2 successful replicates; bands are undefined");
  }

  const double q = normal_quantile(1.0 - config.bootstrap.alpha / 2.0);
  const auto make_collection = [&](FieldKind statistic) {
    BandCollection collection;
    collection.grid = grid;
    collection.statistic = statistic;
    collection.meta.bandwidth = config.estimator.cov_kernel.bandwidth;
    collection.meta.replicates = config.bootstrap.replicates;
    collection.meta.failed_replicates = result.failed_replicates;
    collection.meta.alpha = config.bootstrap.alpha;
    collection.meta.seed = config.bootstrap.seed;
    collection.meta.mode = to_string(config.bootstrap.mode);
    collection.meta.software_version = kVersion;
    return collection;
  };

  const auto finish_band = [&](ConfidenceBand& band, Eigen::Index e, bool correlation_stat) {
    band.grid = grid;
    band.alpha = config.bootstrap.alpha;
    band.replicates = config.bootstrap.replicates;
    band.type = config.band_type;
    band.estimate.resize(G);
    band.boot_sd.resize(G);
    band.lower.resize(G);
    band.upper.resize(G);
    band.valid.assign(static_cast<std::size_t>(G), false);
    for (Eigen::Index g = 0; g < G; ++g) {
      const std::int64_t count =
          correlation_stat ? corr_count(g, e) : cov_count;
      const bool point_ok =
          correlation_stat ? corr_point_valid[static_cast<std::size_t>(e)][static_cast<std::size_t>(g)]
                           : true;
      if (!point_ok || count < 2) {
        band.estimate(g) = kNaN;
        band.boot_sd(g) = kNaN;
        band.lower(g) = kNaN;
        band.upper(g) = kNaN;
        continue;
      }
      const double sum = correlation_stat ? corr_sum(g, e) : cov_sum(g, e);
      const double sumsq = correlation_stat ? corr_sumsq(g, e) : cov_sumsq(g, e);
      const double variance =
          (sumsq - sum * sum / static_cast<double>(count)) / static_cast<double>(count - 1);
      const double sd = std::sqrt(std::max(variance, 0.0));
      const double point = correlation_stat ? corr_point(g, e) : cov_point(g, e);
      band.estimate(g) = point;
      band.boot_sd(g) = sd;
      band.valid[static_cast<std::size_t>(g)] = true;
      if (config.band_type == BandType::normal_approx) {
        band.lower(g) = point - q * sd;
        band.upper(g) = point + q * sd;
      } else {
        // Equal-tailed percentile interval over the stored replicate values.
        std::vector<double> vals;
        const auto& source = correlation_stat ? corr_values : cov_values;
        for (const auto& rep : source) {
          const double v = rep(g, e);
          if (std::isfinite(v)) vals.push_back(v);
        }
        std::sort(vals.begin(), vals.end());
        const auto quantile = [&vals](double frac) {
          const double h = frac * static_cast<double>(vals.size() - 1);
          const std::size_t lo = static_cast<std::size_t>(h);
          const std::size_t hi = std::min(lo + 1, vals.size() - 1);
          return vals[lo] + (h - static_cast<double>(lo)) * (vals[hi] - vals[lo]);
        };
        band.lower(g) = quantile(config.bootstrap.alpha / 2.0);
        band.upper(g) = quantile(1.0 - config.bootstrap.alpha / 2.0);
      }
    }
  };

  result.covariance_bands = make_collection(FieldKind::covariance);
  for (std::size_t e = 0; e < E; ++e) {
    BandCollection::Entry entry;
    entry.k = entries[e].k;
    entry.l = entries[e].l;
    finish_band(entry.band, static_cast<Eigen::Index>(e), false);
    result.covariance_bands.entries.push_back(std::move(entry));
  }
  if (config.correlation) {
    result.correlation_bands = make_collection(FieldKind::correlation);
    for (std::size_t e = 0; e < E; ++e) {
      BandCollection::Entry entry;
      entry.k = entries[e].k;
      entry.l = entries[e].l;
      finish_band(entry.band, static_cast<Eigen::Index>(e), true);
      result.correlation_bands->entries.push_back(std::move(entry));
    }
  }
  return result;
}

}  // namespace condcov
