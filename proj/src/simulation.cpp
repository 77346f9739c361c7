#include "condcov/simulation.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "condcov/error.hpp"
#include "condcov/estimator.hpp"
#include "condcov/format.hpp"
#include "condcov/normal.hpp"
#include "condcov/parallel.hpp"
#include "condcov/version.hpp"

namespace condcov {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::int64_t kSecondsPerDay = 86400;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void validate_temperature_model(const TemperatureModel& model) {
  for (const auto& interval : model.zeta) {
    if (!(interval.lo < interval.hi)) {
      throw Error(Errc::invalid_argument, "zeta intervals must satisfy lo < hi");
    }
    if (interval.lo < 0.0) {
      throw Error(Errc::invalid_argument, "zeta intervals must be nonnegative");
    }
  }
  if (!(model.annual_amplitude >= 0.0) || !std::isfinite(model.offset)) {
    throw Error(Errc::invalid_argument, "temperature model parameters must be finite");
  }
}

Season season_of_day(int day_of_year) {
  if (day_of_year < 1 || day_of_year > 365) {
    throw Error(Errc::invalid_argument,
                "day of year must lie in [1, 365]; got " + std::to_string(day_of_year));
  }
  if (day_of_year >= 335 || day_of_year <= 59) return Season::winter;
  if (day_of_year <= 151) return Season::spring;
  if (day_of_year <= 243) return Season::summer;
  return Season::autumn;
}

double temperature_at(const TemperatureModel& model, int day_of_year, double hour, double zeta) {
  if (!(hour > 0.0 && hour < 24.0)) {
    throw Error(Errc::invalid_argument, "hour must lie strictly inside (0, 24)");
  }
  const double annual =
      model.annual_amplitude * std::sin((day_of_year - model.annual_phase_day) * 2.0 * kPi / 365.0);
  const double daily = zeta * std::sin(kPi * hour / 12.0 + model.daily_phase);
  return annual - daily + model.offset;
}

TemperatureSeries simulate_temperature(const TemperatureModel& model, int days,
                                       int samples_per_day, rng::Xoshiro256pp& rng,
                                       int start_day) {
  validate_temperature_model(model);
  if (days < 1 || samples_per_day < 1) {
    throw Error(Errc::invalid_argument, "days and samples_per_day must be at least 1");
  }
  if (start_day < 1) throw Error(Errc::invalid_argument, "start_day must be at least 1");

  TemperatureSeries out;
  const std::size_t n = static_cast<std::size_t>(days) * static_cast<std::size_t>(samples_per_day);
  out.timestamps.reserve(n);
  out.values.resize(static_cast<Eigen::Index>(n));

  Eigen::Index w = 0;
  for (int d = 0; d < days; ++d) {
    const int absolute_day = start_day - 1 + d;
    const int day_of_year = absolute_day % 365 + 1;
    const ZetaInterval interval = model.zeta[static_cast<std::size_t>(season_of_day(day_of_year))];
    const double zeta = rng.next_uniform(interval.lo, interval.hi);
    for (int s = 0; s < samples_per_day; ++s) {
      const double hour = (s + 0.5) * 24.0 / samples_per_day;
      out.values(w) = temperature_at(model, day_of_year, hour, zeta);
      out.timestamps.push_back(static_cast<std::int64_t>(absolute_day) * kSecondsPerDay +
                               std::llround(hour * 3600.0));
      ++w;
    }
  }
  return out;
}

std::pair<double, double> temperature_bounds(const TemperatureModel& model, int days,
                                             int start_day) {
  validate_temperature_model(model);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int d = 0; d < days; ++d) {
    const int day_of_year = (start_day - 1 + d) % 365 + 1;
    const double annual =
        model.annual_amplitude *
        std::sin((day_of_year - model.annual_phase_day) * 2.0 * kPi / 365.0);
    const double swing = model.zeta[static_cast<std::size_t>(season_of_day(day_of_year))].hi;
    lo = std::min(lo, model.offset + annual - swing);
    hi = std::max(hi, model.offset + annual + swing);
  }
  return {lo, hi};
}

ScenarioSpec scenario_functions(const std::string& name) {
  ScenarioSpec spec;
  spec.name = name;
  if (name == "A") {
    // Logistic transitions: high variance and strong positive dependence in
    // the cold regime, both leveling off in the warm one.
    spec.mean1 = [](double z) { return 6.0 - 0.012 * z; };
    spec.mean2 = [](double z) { return 7.4 - 0.009 * z; };
    spec.var1 = [](double z) { return 0.10 + 0.25 * logistic((2.0 - z) / 2.0); };
    spec.var2 = [](double z) { return 0.08 + 0.20 * logistic((6.0 - z) / 2.5); };
    spec.cov = [spec](double z) {
      const double rho = 0.15 + 0.60 * logistic((3.0 - z) / 2.0);
      return rho * std::sqrt(spec.var1(z) * spec.var2(z));
    };
  } else if (name == "B") {
    // Exponential decay in temperature, fastest for the first channel.
    spec.mean1 = [](double z) { return 5.8 - 0.010 * z; };
    spec.mean2 = [](double z) { return 7.1 - 0.007 * z; };
    spec.var1 = [](double z) { return 0.06 + 0.30 * std::exp(-(z + 5.0) / 9.0); };
    spec.var2 = [](double z) { return 0.05 + 0.22 * std::exp(-(z + 5.0) / 12.0); };
    spec.cov = [spec](double z) {
      const double rho = 0.20 + 0.55 * std::exp(-(z + 5.0) / 10.0);
      return rho * std::sqrt(spec.var1(z) * spec.var2(z));
    };
  } else if (name == "constant") {
    spec.mean1 = [](double) { return 6.0; };
    spec.mean2 = [](double) { return 7.5; };
    spec.var1 = [](double) { return 0.30; };
    spec.var2 = [](double) { return 0.25; };
    spec.cov = [](double) { return 0.10; };
  } else {
    throw Error(Errc::unknown_scenario, "no built-in scenario named '" + name + "'");
  }
  return spec;
}

void validate_scenario(const ScenarioSpec& spec, double z_lo, double z_hi, int sweep_points) {
  if (!spec.mean1 || !spec.mean2 || !spec.var1 || !spec.var2 || !spec.cov) {
    throw Error(Errc::invalid_argument, "scenario functions must all be set");
  }
  if (!(spec.noise_var1 >= 0.0 && spec.noise_var2 >= 0.0)) {
    throw Error(Errc::invalid_argument, "noise variances must be nonnegative");
  }
  if (!(std::abs(spec.ar_coefficient) < 1.0)) {
    throw Error(Errc::invalid_argument, "AR coefficient must satisfy |phi| < 1");
  }
  if (sweep_points < 2 || !(z_lo < z_hi)) {
    throw Error(Errc::invalid_argument, "scenario sweep needs z_lo < z_hi and >= 2 points");
  }
  for (int i = 0; i < sweep_points; ++i) {
    const double z = z_lo + (z_hi - z_lo) * i / (sweep_points - 1);
    const double v1 = spec.var1(z);
    const double v2 = spec.var2(z);
    const double c = spec.cov(z);
    if (!(v1 > 0.0) || !(v2 > 0.0) || !std::isfinite(c) || !std::isfinite(spec.mean1(z)) ||
        !std::isfinite(spec.mean2(z))) {
      throw Error(Errc::non_psd_at_temperature,
                  "scenario is invalid at z=" + std::to_string(z));
    }
    if (c * c > v1 * v2 * (1.0 + 1e-9)) {
      throw Error(Errc::non_psd_at_temperature,
                  "scenario covariance matrix is not PSD at z=" + std::to_string(z));
    }
  }
}

ConfoundedSeries simulate_outputs(const ScenarioSpec& spec, const TemperatureSeries& temperatures,
                                  rng::Xoshiro256pp& rng) {
  const Eigen::Index n = temperatures.values.size();
  if (n < 1 || static_cast<Eigen::Index>(temperatures.timestamps.size()) != n) {
    throw Error(Errc::mismatched_lengths, "temperature series is empty or inconsistent");
  }
  if (!temperatures.values.allFinite()) {
    throw Error(Errc::non_finite_value, "temperature series has non-finite values");
  }
  if (!(std::abs(spec.ar_coefficient) < 1.0)) {
    throw Error(Errc::invalid_argument, "AR coefficient must satisfy |phi| < 1");
  }

  ConfoundedSeries out;
  out.timestamps = temperatures.timestamps;
  out.confounder = temperatures.values;
  out.outputs.resize(n, 2);

  // Latent pair, one 2x2 Cholesky draw per time point.
  for (Eigen::Index t = 0; t < n; ++t) {
    const double z = temperatures.values(t);
    const double v1 = spec.var1(z);
    const double v2 = spec.var2(z);
    const double c = spec.cov(z);
    if (!(v1 >= 0.0) || !(v2 >= 0.0) || c * c > v1 * v2 * (1.0 + 1e-9)) {
      throw Error(Errc::non_psd_at_temperature,
                  "scenario covariance matrix is not PSD at z=" + std::to_string(z));
    }
    const double u = rng.next_normal();
    const double v = rng.next_normal();
    const double l11 = std::sqrt(std::max(v1, 0.0));
    const double l21 = l11 > 0.0 ? c / l11 : 0.0;
    const double l22 = std::sqrt(std::max(v2 - l21 * l21, 0.0));
    out.outputs(t, 0) = spec.mean1(z) + l11 * u;
    out.outputs(t, 1) = spec.mean2(z) + l21 * u + l22 * v;
  }

  // Stationary AR(1) noise per channel, independent across channels.
  const double phi = spec.ar_coefficient;
  const std::array<double, 2> noise_var{spec.noise_var1, spec.noise_var2};
  for (int j = 0; j < 2; ++j) {
    const double stationary_sd = std::sqrt(noise_var[static_cast<std::size_t>(j)]);
    const double innovation_sd =
        std::sqrt(noise_var[static_cast<std::size_t>(j)] * (1.0 - phi * phi));
    double delta = stationary_sd * rng.next_normal();
    out.outputs(0, j) += delta;
    for (Eigen::Index t = 1; t < n; ++t) {
      delta = phi * delta + innovation_sd * rng.next_normal();
      out.outputs(t, j) += delta;
    }
  }

  validate_series(out);
  return out;
}

Eigen::VectorXd CoverageCell::coverage() const {
  Eigen::VectorXd out(hits.size());
  for (Eigen::Index g = 0; g < hits.size(); ++g) {
    out(g) = scored(g) == 0 ? 0.0 : static_cast<double>(hits(g)) / scored(g);
  }
  return out;
}

double CoverageCell::average_coverage() const { return coverage().mean(); }

namespace {

struct DatasetOutcome {
  std::vector<char> mode_ok;
  // hits[mode][alpha](g), pooled over the three matrix entries
  std::vector<std::vector<Eigen::VectorXi>> hits;
};

}  // namespace

CoverageReport run_coverage_study(const StudyConfig& config) {
  validate_temperature_model(config.temperature);
  if (config.datasets < 1) throw Error(Errc::invalid_argument, "study needs at least one dataset");
  if (config.replicates < 2) throw Error(Errc::invalid_argument, "study needs kappa >= 2");
  if (config.modes.empty() || config.alphas.empty()) {
    throw Error(Errc::invalid_argument, "study needs at least one mode and one level");
  }
  for (double alpha : config.alphas) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw Error(Errc::invalid_argument, "study alpha must lie in (0, 1)");
    }
  }

  double z_lo, z_hi;
  if (config.grid_range) {
    z_lo = config.grid_range->first;
    z_hi = config.grid_range->second;
  } else {
    std::tie(z_lo, z_hi) = temperature_bounds(config.temperature, config.days, config.start_day);
  }
  validate_scenario(config.scenario, z_lo, z_hi);

  const EvaluationGrid grid = make_linear_grid(z_lo, z_hi, config.grid_points);
  const Eigen::Index G = grid.size();
  const std::size_t n_modes = config.modes.size();
  const std::size_t n_alphas = config.alphas.size();

  // Truth per entry: Var(y_j | z) = var_j(z) + nu_j^2, Cov(y_1, y_2 | z) = cov(z).
  Eigen::MatrixXd truth(G, 3);
  for (Eigen::Index g = 0; g < G; ++g) {
    const double z = grid.points(g);
    truth(g, 0) = config.scenario.var1(z) + config.scenario.noise_var1;
    truth(g, 1) = config.scenario.var2(z) + config.scenario.noise_var2;
    truth(g, 2) = config.scenario.cov(z);
  }

  std::vector<double> quantiles(n_alphas);
  for (std::size_t a = 0; a < n_alphas; ++a) {
    quantiles[a] = normal_quantile(1.0 - config.alphas[a] / 2.0);
  }

  const Eigen::Index moving_tau =
      config.moving_tau > 0 ? config.moving_tau : static_cast<Eigen::Index>(config.samples_per_day);

  std::vector<DatasetOutcome> outcomes(static_cast<std::size_t>(config.datasets));

  parallel_for(static_cast<std::size_t>(config.datasets), config.workers, [&](std::size_t r) {
    DatasetOutcome& outcome = outcomes[r];
    outcome.mode_ok.assign(n_modes, 0);
    outcome.hits.assign(n_modes, std::vector<Eigen::VectorXi>(
                                     n_alphas, Eigen::VectorXi::Zero(G)));

    rng::Xoshiro256pp temp_rng =
        rng::Xoshiro256pp::substream(config.seed, {rng::kStreamStudyTemperature, r});
    const TemperatureSeries temps = simulate_temperature(
        config.temperature, config.days, config.samples_per_day, temp_rng, config.start_day);
    rng::Xoshiro256pp out_rng =
        rng::Xoshiro256pp::substream(config.seed, {rng::kStreamStudyOutputs, r});
    const ConfoundedSeries series = simulate_outputs(config.scenario, temps, out_rng);

    Eigen::MatrixXd point(G, 3);
    std::optional<EnsembleWorkspace> workspace;
    try {
      const MeanField mean =
          estimate_mean(series, config.estimator.mean_kernel, config.estimator.mean_method);
      const CovarianceField field = estimate_conditional_covariance(
          series, mean, config.estimator.cov_kernel, grid);
      for (Eigen::Index g = 0; g < G; ++g) {
        point(g, 0) = field.matrices[static_cast<std::size_t>(g)](0, 0);
        point(g, 1) = field.matrices[static_cast<std::size_t>(g)](1, 1);
        point(g, 2) = field.matrices[static_cast<std::size_t>(g)](0, 1);
      }
      workspace.emplace(series, config.estimator, grid, config.cache_budget);
    } catch (const Error&) {
      return;  // dataset fails for every mode
    }

    for (std::size_t m = 0; m < n_modes; ++m) {
      try {
        const BlockPlan plan =
            config.modes[m] == BlockMode::disjoint
                ? build_block_plan(series, BlockMode::disjoint, config.disjoint_span)
                : build_block_plan(series, BlockMode::moving, BlockSpan::rows(moving_tau));

        // Streaming moments of the replicate values, centered at the point
        // estimate for numerical stability.
        Eigen::MatrixXd sum_d = Eigen::MatrixXd::Zero(G, 3);
        Eigen::MatrixXd sum_d2 = Eigen::MatrixXd::Zero(G, 3);
        std::int64_t kept = 0;
        std::vector<ReplicateFailure> failures;
        run_ensemble(
            *workspace, plan, config.replicates,
            rng::derive_seed(config.seed, {rng::kStreamStudyBootstrap, r, static_cast<std::uint64_t>(m)}),
            [&](int, const CovarianceField& field) {
              ++kept;
              for (Eigen::Index g = 0; g < G; ++g) {
                const Eigen::MatrixXd& mat = field.matrices[static_cast<std::size_t>(g)];
                const double d0 = mat(0, 0) - point(g, 0);
                const double d1 = mat(1, 1) - point(g, 1);
                const double d2 = mat(0, 1) - point(g, 2);
                sum_d(g, 0) += d0;
                sum_d2(g, 0) += d0 * d0;
                sum_d(g, 1) += d1;
                sum_d2(g, 1) += d1 * d1;
                sum_d(g, 2) += d2;
                sum_d2(g, 2) += d2 * d2;
              }
            },
            failures, 1);
        if (kept < 2) continue;

        for (std::size_t a = 0; a < n_alphas; ++a) {
          for (Eigen::Index g = 0; g < G; ++g) {
            for (int e = 0; e < 3; ++e) {
              const double var =
                  (sum_d2(g, e) - sum_d(g, e) * sum_d(g, e) / kept) / (kept - 1);
              const double sd = std::sqrt(std::max(var, 0.0));
              const double lower = point(g, e) - quantiles[a] * sd;
              const double upper = point(g, e) + quantiles[a] * sd;
              if (lower <= truth(g, e) && truth(g, e) <= upper) {
                outcome.hits[m][a](g) += 1;
              }
            }
          }
        }
        outcome.mode_ok[m] = 1;
      } catch (const Error&) {
        // mode failed for this dataset; counted below
      }
    }
  });

  CoverageReport report;
  report.config = config;
  report.grid = grid;
  report.failed_datasets_per_mode.assign(n_modes, 0);
  report.cells.reserve(n_modes * n_alphas);

  for (std::size_t m = 0; m < n_modes; ++m) {
    int ok_count = 0;
    for (const auto& outcome : outcomes) ok_count += outcome.mode_ok[m];
    report.failed_datasets_per_mode[m] = config.datasets - ok_count;
    for (std::size_t a = 0; a < n_alphas; ++a) {
      CoverageCell cell;
      cell.mode = config.modes[m];
      cell.alpha = config.alphas[a];
      cell.hits = Eigen::VectorXi::Zero(G);
      cell.scored = Eigen::VectorXi::Constant(G, 3 * ok_count);
      for (const auto& outcome : outcomes) {
        if (outcome.mode_ok[m]) cell.hits += outcome.hits[m][a];
      }
      report.cells.push_back(std::move(cell));
    }
  }

  bool any_ok = false;
  for (std::size_t m = 0; m < n_modes; ++m) {
    any_ok = any_ok || report.failed_datasets_per_mode[m] < config.datasets;
  }
  if (!any_ok) {
    throw Error(Errc::too_many_failures, "every simulated dataset failed estimation");
  }
  return report;
}

std::string coverage_report_csv(const CoverageReport& report) {
  std::ostringstream out;
  const StudyConfig& cfg = report.config;
  out << "# condcov coverage report\n";
  out << "# version: " << kVersion << "\n";
  out << "# scenario: " << cfg.scenario.name << "\n";
  out << "# mean_method: " << to_string(cfg.estimator.mean_method) << "\n";
  out << "# kernel: " << to_string(cfg.estimator.cov_kernel.family) << "\n";
  out << "# cov_bandwidth: " << format_double(cfg.estimator.cov_kernel.bandwidth) << "\n";
  out << "# mean_bandwidth: " << format_double(cfg.estimator.mean_kernel.bandwidth) << "\n";
  out << "# replicates: " << cfg.replicates << "\n";
  out << "# datasets: " << cfg.datasets << "\n";
  out << "# days: " << cfg.days << "\n";
  out << "# samples_per_day: " << cfg.samples_per_day << "\n";
  out << "# start_day: " << cfg.start_day << "\n";
  out << "# grid_points: " << report.grid.size() << "\n";
  out << "# grid_min: " << format_double(report.grid.points(0)) << "\n";
  out << "# grid_max: " << format_double(report.grid.points(report.grid.size() - 1)) << "\n";
  out << "# seed: " << cfg.seed << "\n";
  out << "scenario,mode,level,grid_z,coverage,n_fail\n";

  for (std::size_t m = 0; m < cfg.modes.size(); ++m) {
    const int n_fail = report.failed_datasets_per_mode[m];
    for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
      const CoverageCell& cell = report.cells[m * cfg.alphas.size() + a];
      const Eigen::VectorXd coverage = cell.coverage();
      const std::string level = format_double(1.0 - cell.alpha);
      for (Eigen::Index g = 0; g < report.grid.size(); ++g) {
        out << cfg.scenario.name << ',' << to_string(cell.mode) << ',' << level << ','
            << format_double(report.grid.points(g)) << ',' << format_double(coverage(g)) << ','
            << n_fail << "\n";
      }
      out << cfg.scenario.name << ',' << to_string(cell.mode) << ',' << level << ",average,"
          << format_double(cell.average_coverage()) << ',' << n_fail << "\n";
    }
  }
  return out.str();
}

}  // namespace condcov
