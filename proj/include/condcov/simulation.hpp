#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "condcov/bootstrap.hpp"
#include "condcov/rng.hpp"
#include "condcov/series.hpp"

namespace condcov {

struct ZetaInterval {
  double lo = 0.0;
  double hi = 1.0;
};

enum class Season { winter = 0, spring = 1, summer = 2, autumn = 3 };

/// Synthetic confounder generator: an annual sine, a daily sine whose
/// day-specific amplitude zeta_d is drawn uniformly from a season-dependent
/// interval, and a constant offset:
///
///   z_d(eta) = A sin((d - d0) 2 pi / 365) - zeta_d sin(pi eta / 12 + phi) + c.
///
/// Warmer seasons get wider zeta intervals, so daily swings are larger in
/// summer than in winter.
struct TemperatureModel {
  double annual_amplitude = 8.0;
  double annual_phase_day = 141.0;
  double daily_phase = 0.3;
  double offset = 5.5;
  // winter, spring, summer, autumn (meteorological quarters)
  std::array<ZetaInterval, 4> zeta{{{0.5, 2.0}, {1.0, 4.0}, {2.0, 6.0}, {1.0, 4.0}}};
};

void validate_temperature_model(const TemperatureModel& model);

/// Meteorological season of a day of year in 1..365.
Season season_of_day(int day_of_year);

/// Deterministic evaluation with a fixed daily amplitude.
double temperature_at(const TemperatureModel& model, int day_of_year, double hour, double zeta);

struct TemperatureSeries {
  std::vector<std::int64_t> timestamps;
  Eigen::VectorXd values;
};

/// Draws one zeta per day, then evaluates the model at `samples_per_day`
/// equally spaced hours strictly inside (0, 24). Timestamps count seconds
/// from an epoch at the start of day 1.
TemperatureSeries simulate_temperature(const TemperatureModel& model, int days,
                                       int samples_per_day, rng::Xoshiro256pp& rng,
                                       int start_day = 1);

/// Analytic bounds on any value the model can generate over the period.
std::pair<double, double> temperature_bounds(const TemperatureModel& model, int days,
                                             int start_day = 1);

/// Ground truth for a two-channel simulation: conditional means, variances
/// and covariance as functions of the confounder, plus the AR(1) observation
/// noise added on top of the latent Gaussian pair.
struct ScenarioSpec {
  std::string name = "custom";
  std::function<double(double)> mean1, mean2;
  std::function<double(double)> var1, var2;  // latent variances, > 0
  std::function<double(double)> cov;         // latent covariance
  double noise_var1 = 0.02;
  double noise_var2 = 0.017;
  double ar_coefficient = 0.8;
};

/// Built-in scenario function sets. "A" uses logistic transitions between a
/// high-covariance cold regime and a low-covariance warm one; "B" uses
/// exponential decay in temperature; "constant" has flat means and a fixed
/// covariance matrix (useful for calibration runs). UnknownScenario
/// otherwise.
ScenarioSpec scenario_functions(const std::string& name);

/// Sweeps [z_lo, z_hi] and rejects scenarios whose 2x2 matrix is not
/// positive semidefinite somewhere, whose variances are non-positive, or
/// whose noise/AR settings are out of range.
void validate_scenario(const ScenarioSpec& spec, double z_lo, double z_hi, int sweep_points = 1000);

/// Latent bivariate normal x_t ~ N(m(z_t), Sigma(z_t)) drawn independently
/// across t, plus independent per-channel AR(1) noise started from its
/// stationary distribution: y_jt = x_jt + d_jt with
/// d_jt = phi d_{j,t-1} + e_jt, Var(e) = nu_j^2 (1 - phi^2).
ConfoundedSeries simulate_outputs(const ScenarioSpec& spec, const TemperatureSeries& temperatures,
                                  rng::Xoshiro256pp& rng);

struct StudyConfig {
  ScenarioSpec scenario;
  TemperatureModel temperature;
  EstimatorConfig estimator{{KernelFamily::gaussian, 1.5},
                            {KernelFamily::gaussian, 1.5},
                            MeanMethod::local_linear};
  int replicates = 100;  // kappa per mode
  std::vector<BlockMode> modes{BlockMode::disjoint, BlockMode::moving};
  std::vector<double> alphas{0.05, 0.01};
  int datasets = 1;  // R
  int days = 365;
  int samples_per_day = 24;
  int start_day = 1;
  Eigen::Index grid_points = 25;
  // Defaults to the analytic temperature bounds of the simulated period.
  std::optional<std::pair<double, double>> grid_range;
  BlockSpan disjoint_span = BlockSpan::calendar_day();
  Eigen::Index moving_tau = 0;  // 0: use samples_per_day
  std::uint64_t seed = 0;
  int workers = 1;
  std::size_t cache_budget = kDefaultCacheBudget;
};

/// Per-grid and average coverage for one (mode, level) pair, pooled over
/// datasets and the three matrix entries (both variances and the
/// covariance). Variance truth includes the observation-noise offsets.
struct CoverageCell {
  BlockMode mode = BlockMode::disjoint;
  double alpha = 0.05;
  Eigen::VectorXi hits;    // per grid point
  Eigen::VectorXi scored;  // per grid point

  Eigen::VectorXd coverage() const;
  double average_coverage() const;
};

struct CoverageReport {
  StudyConfig config;
  EvaluationGrid grid;
  std::vector<CoverageCell> cells;            // modes x alphas, mode-major
  std::vector<int> failed_datasets_per_mode;  // aligned with config.modes
};

/// Simulates `datasets` independent series, estimates the covariance field
/// for each, bootstraps bands at every configured (mode, level) and scores
/// them against the scenario truth. Per-dataset substreams make the report
/// a pure function of the configuration; datasets failing estimation are
/// counted and skipped, and the study aborts only if all of them fail.
CoverageReport run_coverage_study(const StudyConfig& config);

/// Delimited report: echo header lines starting with '#', then one row per
/// (scenario, mode, level, grid_z) and a summary row per (scenario, mode,
/// level) with grid_z = "average".
std::string coverage_report_csv(const CoverageReport& report);

}  // namespace condcov
