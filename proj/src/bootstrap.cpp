#include "condcov/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "condcov/error.hpp"
#include "condcov/normal.hpp"
#include "condcov/parallel.hpp"

namespace condcov {

namespace {

// Replicates are evaluated in fixed-size batches so the ordered reduction
// never holds more than kBatch fields in memory, whatever kappa is.
constexpr int kBatch = 256;

void check_plan_matches(const BlockPlan& plan, const ConfoundedSeries& series) {
  if (plan.n != series.rows()) {
    throw Error(Errc::invalid_argument, "block plan was built for a different series length");
  }
  validate_plan(plan);
}

Eigen::VectorXd block_multiplicities(const BlockPlan& plan, const std::vector<Eigen::Index>& draws,
                                     Eigen::Index n) {
  Eigen::VectorXd mult = Eigen::VectorXd::Zero(n);
  Eigen::Index remaining = n;
  for (const Eigen::Index idx : draws) {
    const IndexBlock& block = plan.blocks[static_cast<std::size_t>(idx)];
    const Eigen::Index take = std::min(block.length(), remaining);
    for (Eigen::Index i = block.begin; i < block.begin + take; ++i) mult(i) += 1.0;
    remaining -= take;
    if (remaining == 0) break;
  }
  return mult;
}

// Weighted replicate evaluation against the cached kernel matrices. Returns
// a failure reason instead of a field for degenerate replicates.
std::optional<std::string> eval_replicate_cached(const EnsembleWorkspace& ws,
                                                 const Eigen::VectorXd& mult,
                                                 CovarianceField& out) {
  const ConfoundedSeries& series = ws.series();
  const Eigen::Index n = series.rows();
  const Eigen::Index p = series.channels();
  const double floor = weight_floor(n);
  const bool local_linear = ws.estimator().mean_method == MeanMethod::local_linear;

  Eigen::MatrixXd rhs(n, p + 1);
  rhs.leftCols(p) = mult.asDiagonal() * series.outputs;
  rhs.col(p) = mult;

  Eigen::MatrixXd residuals(n, p);
  if (!local_linear) {
    const Eigen::MatrixXd a = ws.w0() * rhs;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (mult(i) == 0.0) {
        residuals.row(i).setZero();
        continue;
      }
      const double den = a(i, p);
      if (den <= floor) {
        return "replicate mean weights degenerate at z=" + std::to_string(series.confounder(i));
      }
      residuals.row(i) = series.outputs.row(i) - a.row(i).head(p) / den;
    }
  } else {
    const Eigen::MatrixXd a0 = ws.w0() * rhs;
    const Eigen::MatrixXd a1 = ws.w1() * rhs;
    const Eigen::VectorXd s2 = ws.w2() * mult;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (mult(i) == 0.0) {
        residuals.row(i).setZero();
        continue;
      }
      const double s0 = a0(i, p);
      const double s1 = a1(i, p);
      if (s0 <= floor) {
        return "replicate mean weights degenerate at z=" + std::to_string(series.confounder(i));
      }
      const double denom = s0 * s2(i) - s1 * s1;
      if (denom <= kSingularRelTol * s0 * s2(i)) {
        return "replicate local-linear fit singular at z=" + std::to_string(series.confounder(i));
      }
      residuals.row(i) =
          series.outputs.row(i) - (s2(i) * a0.row(i).head(p) - s1 * a1.row(i).head(p)) / denom;
    }
  }

  const Eigen::Index G = ws.grid().size();
  out.grid = ws.grid();
  out.bandwidth = ws.estimator().cov_kernel.bandwidth;
  out.kind = FieldKind::covariance;
  out.matrices.assign(static_cast<std::size_t>(G), Eigen::MatrixXd());

  Eigen::VectorXd wr(n);
  for (Eigen::Index g = 0; g < G; ++g) {
    wr = mult.array() * ws.wg().row(g).transpose().array();
    const double wsum = wr.sum();
    if (wsum <= floor) {
      return "replicate weights degenerate at grid point " + std::to_string(g + 1);
    }
    Eigen::MatrixXd acc(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
      const auto rk = residuals.col(k).array();
      for (Eigen::Index l = k; l < p; ++l) {
        acc(k, l) = (wr.array() * rk * residuals.col(l).array()).sum();
      }
    }
    acc /= wsum;
    for (Eigen::Index k = 0; k < p; ++k) {
      for (Eigen::Index l = 0; l < k; ++l) acc(k, l) = acc(l, k);
    }
    out.matrices[static_cast<std::size_t>(g)] = std::move(acc);
  }
  return std::nullopt;
}

std::optional<std::string> eval_replicate_direct(const EnsembleWorkspace& ws,
                                                 const BlockPlan& plan, rng::Xoshiro256pp& rng,
                                                 CovarianceField& out) {
  const ConfoundedSeries resampled = resample_series(ws.series(), plan, rng);
  try {
    const MeanField mean =
        estimate_mean(resampled, ws.estimator().mean_kernel, ws.estimator().mean_method);
    out = estimate_conditional_covariance(resampled, mean, ws.estimator().cov_kernel, ws.grid());
    return std::nullopt;
  } catch (const Error& err) {
    if (err.code() == Errc::degenerate_weights || err.code() == Errc::singular_local_fit) {
      return std::string(err.what());
    }
    throw;
  }
}

}  // namespace

const char* to_string(BandType type) {
  return type == BandType::normal_approx ? "normal" : "percentile";
}

BandType band_type_from_string(const std::string& name) {
  if (name == "normal") return BandType::normal_approx;
  if (name == "percentile") return BandType::percentile;
  throw Error(Errc::invalid_argument, "unknown band type '" + name + "'");
}

void validate_bootstrap_config(const BootstrapConfig& config) {
  if (config.replicates < 2) {
    throw Error(Errc::invalid_argument, "bootstrap needs at least 2 replicates");
  }
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
    throw Error(Errc::invalid_argument, "alpha must lie in (0, 1)");
  }
  if (config.span.unit == BlockSpan::Unit::rows && config.span.count < 1) {
    throw Error(Errc::invalid_argument, "block span must be at least 1 row");
  }
}

std::vector<Eigen::Index> draw_block_sequence(const BlockPlan& plan, Eigen::Index target_rows,
                                              rng::Xoshiro256pp& rng) {
  const std::uint64_t block_count = static_cast<std::uint64_t>(plan.block_count());
  const double mean_length = plan.mean_block_length();
  const std::size_t planned =
      static_cast<std::size_t>(std::ceil(static_cast<double>(target_rows) / mean_length)) + 1;

  std::vector<Eigen::Index> draws;
  draws.reserve(planned);
  Eigen::Index accumulated = 0;
  while (draws.size() < planned || accumulated < target_rows) {
    const Eigen::Index idx = static_cast<Eigen::Index>(rng.next_below(block_count));
    draws.push_back(idx);
    accumulated += plan.blocks[static_cast<std::size_t>(idx)].length();
  }
  return draws;
}

ConfoundedSeries resample_series(const ConfoundedSeries& series, const BlockPlan& plan,
                                 rng::Xoshiro256pp& rng) {
  check_plan_matches(plan, series);
  const Eigen::Index n = series.rows();
  const Eigen::Index p = series.channels();
  const std::vector<Eigen::Index> draws = draw_block_sequence(plan, n, rng);

  ConfoundedSeries out;
  out.outputs.resize(n, p);
  out.confounder.resize(n);
  out.timestamps.resize(static_cast<std::size_t>(n));
  if (series.missing) {
    out.missing = MissingMask{
        Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, p, false),
        Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, false)};
  }

  Eigen::Index w = 0;
  for (const Eigen::Index idx : draws) {
    const IndexBlock& block = plan.blocks[static_cast<std::size_t>(idx)];
    for (Eigen::Index i = block.begin; i < block.end && w < n; ++i, ++w) {
      out.outputs.row(w) = series.outputs.row(i);
      out.confounder(w) = series.confounder(i);
      out.timestamps[static_cast<std::size_t>(w)] = w + 1;
      if (series.missing) {
        out.missing->outputs.row(w) = series.missing->outputs.row(i);
        out.missing->confounder(w) = series.missing->confounder(i);
      }
    }
    if (w == n) break;
  }
  return out;
}

EnsembleWorkspace::EnsembleWorkspace(const ConfoundedSeries& series,
                                     const EstimatorConfig& estimator, const EvaluationGrid& grid,
                                     std::size_t cache_budget)
    : series_(&series), estimator_(estimator), grid_(&grid) {
  require_dense(series);
  validate_grid(grid);
  validate_kernel(estimator.cov_kernel);
  validate_kernel(estimator.mean_kernel);

  const std::size_t n = static_cast<std::size_t>(series.rows());
  const std::size_t G = static_cast<std::size_t>(grid.size());
  const bool local_linear = estimator.mean_method == MeanMethod::local_linear;
  const std::size_t needed = ((local_linear ? 3 : 1) * n * n + G * n) * sizeof(double);
  if (needed > cache_budget) return;

  const Eigen::Index ni = series.rows();
  w0_.resize(ni, ni);
  if (local_linear) {
    w1_.resize(ni, ni);
    w2_.resize(ni, ni);
  }
  for (Eigen::Index i = 0; i < ni; ++i) {
    const double z0 = series.confounder(i);
    for (Eigen::Index j = 0; j < ni; ++j) {
      const double d = series.confounder(j) - z0;
      const double w = kernel_weight(estimator.mean_kernel, d);
      w0_(i, j) = w;
      if (local_linear) {
        w1_(i, j) = w * d;
        w2_(i, j) = w * d * d;
      }
    }
  }
  wg_.resize(grid.size(), ni);
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    for (Eigen::Index i = 0; i < ni; ++i) {
      wg_(g, i) = kernel_weight(estimator.cov_kernel, series.confounder(i) - grid.points(g));
    }
  }
  cached_ = true;
}

void run_ensemble(const EnsembleWorkspace& workspace, const BlockPlan& plan, int replicates,
                  std::uint64_t seed,
                  const std::function<void(int, const CovarianceField&)>& on_field,
                  std::vector<ReplicateFailure>& failures, int workers) {
  if (replicates < 2) throw Error(Errc::invalid_argument, "bootstrap needs at least 2 replicates");
  check_plan_matches(plan, workspace.series());

  const Eigen::Index n = workspace.series().rows();
  std::vector<CovarianceField> fields(kBatch);
  std::vector<std::optional<std::string>> slot_failures(kBatch);

  for (int base = 0; base < replicates; base += kBatch) {
    const int count = std::min(kBatch, replicates - base);
    parallel_for(static_cast<std::size_t>(count), workers, [&](std::size_t slot) {
      const int rep = base + static_cast<int>(slot);
      rng::Xoshiro256pp rng = rng::Xoshiro256pp::substream(
          seed, {rng::kStreamBootstrapReplicate, static_cast<std::uint64_t>(rep)});
      if (workspace.cached()) {
        const std::vector<Eigen::Index> draws = draw_block_sequence(plan, n, rng);
        const Eigen::VectorXd mult = block_multiplicities(plan, draws, n);
        slot_failures[slot] = eval_replicate_cached(workspace, mult, fields[slot]);
      } else {
        slot_failures[slot] = eval_replicate_direct(workspace, plan, rng, fields[slot]);
      }
    });
    for (int slot = 0; slot < count; ++slot) {
      if (slot_failures[static_cast<std::size_t>(slot)]) {
        failures.push_back({base + slot, *slot_failures[static_cast<std::size_t>(slot)]});
      } else {
        on_field(base + slot, fields[static_cast<std::size_t>(slot)]);
      }
    }
  }

  if (2 * failures.size() > static_cast<std::size_t>(replicates)) {
    throw Error(Errc::too_many_failures,
                std::to_string(failures.size()) + " of " + std::to_string(replicates) +
                    " replicates were degenerate; adjust the bandwidth or the grid");
  }
}

EnsembleResult bootstrap_ensemble(const ConfoundedSeries& series, const BlockPlan& plan,
                                  const EstimatorConfig& estimator, const EvaluationGrid& grid,
                                  int replicates, std::uint64_t seed, int workers,
                                  std::size_t cache_budget) {
  const EnsembleWorkspace workspace(series, estimator, grid, cache_budget);
  EnsembleResult result;
  run_ensemble(
      workspace, plan, replicates, seed,
      [&result](int rep, const CovarianceField& field) {
        result.fields.push_back(field);
        result.replicate_ids.push_back(rep);
      },
      result.failures, workers);
  return result;
}

ConfidenceBand confidence_band(const EvaluationGrid& grid, const Eigen::VectorXd& estimate,
                               const std::vector<Eigen::VectorXd>& replicate_values, double alpha) {
  validate_grid(grid);
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(Errc::invalid_argument, "alpha must lie in (0, 1)");
  }
  const Eigen::Index G = grid.size();
  if (estimate.size() != G) {
    throw Error(Errc::invalid_argument, "estimate length does not match the grid");
  }
  for (const auto& values : replicate_values) {
    if (values.size() != G) {
      throw Error(Errc::invalid_argument, "replicate value length does not match the grid");
    }
  }

  ConfidenceBand band;
  band.grid = grid;
  band.estimate = estimate;
  band.boot_sd.resize(G);
  band.lower.resize(G);
  band.upper.resize(G);
  band.valid.assign(static_cast<std::size_t>(G), true);
  band.alpha = alpha;
  band.replicates = static_cast<int>(replicate_values.size());
  band.type = BandType::normal_approx;

  const double q = normal_quantile(1.0 - alpha / 2.0);
  for (Eigen::Index g = 0; g < G; ++g) {
    double sum = 0.0;
    int count = 0;
    for (const auto& values : replicate_values) {
      if (std::isfinite(values(g))) {
        sum += values(g);
        ++count;
      }
    }
    if (count < 2) {
      throw Error(Errc::insufficient_replicates,
                  "fewer than 2 finite replicate values at grid point " + std::to_string(g + 1) +
                      " (z=" + std::to_string(grid.points(g)) + ")");
    }
    const double mean = sum / count;
    double ss = 0.0;
    for (const auto& values : replicate_values) {
      if (std::isfinite(values(g))) {
        const double d = values(g) - mean;
        ss += d * d;
      }
    }
    const double sd = std::sqrt(ss / (count - 1));
    band.boot_sd(g) = sd;
    band.lower(g) = estimate(g) - q * sd;
    band.upper(g) = estimate(g) + q * sd;
  }
  return band;
}

ConfidenceBand percentile_band(const EvaluationGrid& grid, const Eigen::VectorXd& estimate,
                               const std::vector<Eigen::VectorXd>& replicate_values, double alpha) {
  ConfidenceBand band = confidence_band(grid, estimate, replicate_values, alpha);
  band.type = BandType::percentile;

  std::vector<double> values;
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    values.clear();
    for (const auto& rep : replicate_values) {
      if (std::isfinite(rep(g))) values.push_back(rep(g));
    }
    std::sort(values.begin(), values.end());
    const auto quantile = [&values](double q) {
      const double h = q * static_cast<double>(values.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(h);
      const std::size_t hi = std::min(lo + 1, values.size() - 1);
      return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
    };
    band.lower(g) = quantile(alpha / 2.0);
    band.upper(g) = quantile(1.0 - alpha / 2.0);
  }
  return band;
}

void validate_band(const ConfidenceBand& band) {
  validate_grid(band.grid);
  const Eigen::Index G = band.grid.size();
  if (band.estimate.size() != G || band.boot_sd.size() != G || band.lower.size() != G ||
      band.upper.size() != G || static_cast<Eigen::Index>(band.valid.size()) != G) {
    throw Error(Errc::invalid_argument, "band arrays do not match the grid length");
  }
  if (!(band.alpha > 0.0 && band.alpha < 1.0)) {
    throw Error(Errc::invalid_argument, "band alpha must lie in (0, 1)");
  }
  for (Eigen::Index g = 0; g < G; ++g) {
    if (!band.valid[static_cast<std::size_t>(g)]) continue;
    if (band.boot_sd(g) < 0.0) {
      throw Error(Errc::invalid_argument, "negative bootstrap sd at grid point " + std::to_string(g + 1));
    }
    if (!(band.lower(g) <= band.estimate(g) && band.estimate(g) <= band.upper(g))) {
      if (band.type == BandType::normal_approx) {
        throw Error(Errc::invalid_argument,
                    "band does not contain its estimate at grid point " + std::to_string(g + 1));
      }
    }
    if (band.type == BandType::normal_approx) {
      const double asym = std::abs((band.upper(g) - band.estimate(g)) - (band.estimate(g) - band.lower(g)));
      if (asym > 1e-12 * std::max(1.0, std::abs(band.estimate(g)))) {
        throw Error(Errc::invalid_argument,
                    "band is not symmetric about its estimate at grid point " + std::to_string(g + 1));
      }
    }
  }
}

CoverageResult coverage_rate(const std::vector<ConfidenceBand>& bands, const Eigen::VectorXd& truth) {
  if (bands.empty()) throw Error(Errc::invalid_argument, "no bands supplied");
  const EvaluationGrid& grid = bands.front().grid;
  const Eigen::Index G = grid.size();
  if (truth.size() != G) {
    throw Error(Errc::grid_mismatch, "truth length does not match the band grid");
  }
  for (const auto& band : bands) {
    if (band.grid.size() != G || (band.grid.points.array() != grid.points.array()).any()) {
      throw Error(Errc::grid_mismatch, "bands do not share a common grid");
    }
  }

  CoverageResult result;
  result.per_grid.resize(G);
  for (Eigen::Index g = 0; g < G; ++g) {
    int contained = 0;
    int scored = 0;
    for (const auto& band : bands) {
      if (!band.valid[static_cast<std::size_t>(g)]) continue;
      ++scored;
      if (band.lower(g) <= truth(g) && truth(g) <= band.upper(g)) ++contained;
    }
    result.per_grid(g) = scored == 0 ? 0.0 : static_cast<double>(contained) / scored;
  }
  result.average = result.per_grid.mean();
  return result;
}

}  // namespace condcov
