#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "condcov/bandwidth.hpp"
#include "condcov/csv.hpp"
#include "condcov/error.hpp"
#include "condcov/export.hpp"
#include "condcov/format.hpp"
#include "condcov/ingest.hpp"
#include "condcov/parallel.hpp"
#include "condcov/pipeline.hpp"
#include "condcov/simulation.hpp"
#include "condcov/svg.hpp"
#include "condcov/version.hpp"

namespace {

using condcov::Errc;
using condcov::Error;
using nlohmann::json;

std::string default_out_dir() {
  const char* env = std::getenv("CONDCOV_OUT");
  return env != nullptr && *env != '\0' ? env : "condcov-out";
}

// Every run stages its artifacts in memory and writes them only after the
// pipeline succeeded, so a failing run leaves the manifest and an error log
// and nothing else.
struct Artifacts {
  std::vector<std::pair<std::string, std::string>> files;

  void add(const std::string& name, std::string content) {
    files.emplace_back(name, std::move(content));
  }
};

struct ColumnOptions {
  std::string time_column = "time";
  std::string confounder_column = "temp";
  std::vector<std::string> output_columns;
  std::string time_format = "iso";
};

struct EstimatorOptions {
  std::string kernel = "gaussian";
  double bandwidth = 0.0;       // required unless candidates are given
  double mean_bandwidth = 0.0;  // 0: same as bandwidth
  std::string mean_method = "nadaraya-watson";
  std::vector<double> candidates;
  int folds = 5;
  int grid = 100;
  double grid_min = std::numeric_limits<double>::quiet_NaN();
  double grid_max = std::numeric_limits<double>::quiet_NaN();
};

struct EstimateArgs {
  std::string input;
  ColumnOptions columns;
  EstimatorOptions estimator;
  bool correlation = true;
  bool svg = true;
  std::string out = default_out_dir();
  int workers = condcov::default_worker_count();
};

struct BandArgs {
  EstimateArgs base;
  std::string mode = "disjoint";
  std::string span = "day";
  int replicates = 1000;
  double alpha = 0.05;
  std::string band_type = "normal";
  std::uint64_t seed = 0;
};

struct SimulateArgs {
  std::string scenario = "A";
  int days = 365;
  int samples_per_day = 24;
  int start_day = 1;
  std::uint64_t seed = 0;
  std::string time_format = "epoch";
  std::string out = default_out_dir();
};

struct CoverageArgs {
  std::string scenario = "A";
  int datasets = 1;
  int replicates = 100;
  int days = 365;
  int samples_per_day = 24;
  int start_day = 1;
  int grid = 25;
  double grid_min = std::numeric_limits<double>::quiet_NaN();
  double grid_max = std::numeric_limits<double>::quiet_NaN();
  std::string kernel = "gaussian";
  double bandwidth = 1.5;
  double mean_bandwidth = 0.0;
  std::string mean_method = "local-linear";
  std::string modes = "both";
  std::string span = "day";
  int moving_tau = 0;
  std::uint64_t seed = 0;
  std::string out = default_out_dir();
  int workers = condcov::default_worker_count();
};

// ---------------------------------------------------------------------------
// Manifest (de)serialization. The manifest echoes the fully resolved options
// of a run; `condcov rerun --manifest <file>` replays it.
// ---------------------------------------------------------------------------

json to_json(const ColumnOptions& c) {
  return json{{"time_column", c.time_column},
              {"confounder_column", c.confounder_column},
              {"output_columns", c.output_columns},
              {"time_format", c.time_format}};
}

void from_json_cols(const json& j, ColumnOptions& c) {
  j.at("time_column").get_to(c.time_column);
  j.at("confounder_column").get_to(c.confounder_column);
  j.at("output_columns").get_to(c.output_columns);
  j.at("time_format").get_to(c.time_format);
}

json to_json(const EstimatorOptions& e) {
  json j{{"kernel", e.kernel},
         {"bandwidth", e.bandwidth},
         {"mean_bandwidth", e.mean_bandwidth},
         {"mean_method", e.mean_method},
         {"folds", e.folds},
         {"grid", e.grid}};
  j["candidates"] = e.candidates;
  if (std::isfinite(e.grid_min)) j["grid_min"] = e.grid_min;
  if (std::isfinite(e.grid_max)) j["grid_max"] = e.grid_max;
  return j;
}

void from_json_est(const json& j, EstimatorOptions& e) {
  j.at("kernel").get_to(e.kernel);
  j.at("bandwidth").get_to(e.bandwidth);
  j.at("mean_bandwidth").get_to(e.mean_bandwidth);
  j.at("mean_method").get_to(e.mean_method);
  j.at("folds").get_to(e.folds);
  j.at("grid").get_to(e.grid);
  j.at("candidates").get_to(e.candidates);
  if (j.contains("grid_min")) j.at("grid_min").get_to(e.grid_min);
  if (j.contains("grid_max")) j.at("grid_max").get_to(e.grid_max);
}

json to_json(const EstimateArgs& a) {
  json j{{"input", a.input},
         {"correlation", a.correlation},
         {"svg", a.svg},
         {"out", a.out},
         {"workers", a.workers}};
  j["columns"] = to_json(a.columns);
  j["estimator"] = to_json(a.estimator);
  return j;
}

void from_json_args(const json& j, EstimateArgs& a) {
  j.at("input").get_to(a.input);
  j.at("correlation").get_to(a.correlation);
  j.at("svg").get_to(a.svg);
  j.at("out").get_to(a.out);
  j.at("workers").get_to(a.workers);
  from_json_cols(j.at("columns"), a.columns);
  from_json_est(j.at("estimator"), a.estimator);
}

json to_json(const BandArgs& a) {
  json j = to_json(a.base);
  j["mode"] = a.mode;
  j["span"] = a.span;
  j["replicates"] = a.replicates;
  j["alpha"] = a.alpha;
  j["band_type"] = a.band_type;
  j["seed"] = a.seed;
  return j;
}

void from_json_args(const json& j, BandArgs& a) {
  from_json_args(j, a.base);
  j.at("mode").get_to(a.mode);
  j.at("span").get_to(a.span);
  j.at("replicates").get_to(a.replicates);
  j.at("alpha").get_to(a.alpha);
  j.at("band_type").get_to(a.band_type);
  j.at("seed").get_to(a.seed);
}

json to_json(const SimulateArgs& a) {
  return json{{"scenario", a.scenario},       {"days", a.days},
              {"samples_per_day", a.samples_per_day}, {"start_day", a.start_day},
              {"seed", a.seed},               {"time_format", a.time_format},
              {"out", a.out}};
}

void from_json_args(const json& j, SimulateArgs& a) {
  j.at("scenario").get_to(a.scenario);
  j.at("days").get_to(a.days);
  j.at("samples_per_day").get_to(a.samples_per_day);
  j.at("start_day").get_to(a.start_day);
  j.at("seed").get_to(a.seed);
  j.at("time_format").get_to(a.time_format);
  j.at("out").get_to(a.out);
}

json to_json(const CoverageArgs& a) {
  json j{{"scenario", a.scenario},
         {"datasets", a.datasets},
         {"replicates", a.replicates},
         {"days", a.days},
         {"samples_per_day", a.samples_per_day},
         {"start_day", a.start_day},
         {"grid", a.grid},
         {"kernel", a.kernel},
         {"bandwidth", a.bandwidth},
         {"mean_bandwidth", a.mean_bandwidth},
         {"mean_method", a.mean_method},
         {"modes", a.modes},
         {"span", a.span},
         {"moving_tau", a.moving_tau},
         {"seed", a.seed},
         {"out", a.out},
         {"workers", a.workers}};
  if (std::isfinite(a.grid_min)) j["grid_min"] = a.grid_min;
  if (std::isfinite(a.grid_max)) j["grid_max"] = a.grid_max;
  return j;
}

void from_json_args(const json& j, CoverageArgs& a) {
  j.at("scenario").get_to(a.scenario);
  j.at("datasets").get_to(a.datasets);
  j.at("replicates").get_to(a.replicates);
  j.at("days").get_to(a.days);
  j.at("samples_per_day").get_to(a.samples_per_day);
  j.at("start_day").get_to(a.start_day);
  j.at("grid").get_to(a.grid);
  j.at("kernel").get_to(a.kernel);
  j.at("bandwidth").get_to(a.bandwidth);
  j.at("mean_bandwidth").get_to(a.mean_bandwidth);
  j.at("mean_method").get_to(a.mean_method);
  j.at("modes").get_to(a.modes);
  j.at("span").get_to(a.span);
  j.at("moving_tau").get_to(a.moving_tau);
  j.at("seed").get_to(a.seed);
  j.at("out").get_to(a.out);
  j.at("workers").get_to(a.workers);
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

condcov::ConfoundedSeries load_and_fill(const EstimateArgs& args) {
  if (!std::filesystem::exists(args.input)) {
    throw Error(Errc::invalid_argument, "input file '" + args.input + "' does not exist");
  }
  condcov::ColumnMap map;
  map.time_column = args.columns.time_column;
  map.confounder_column = args.columns.confounder_column;
  map.output_columns = args.columns.output_columns;
  const condcov::TimeFormat fmt = condcov::time_format_from_string(args.columns.time_format);
  const condcov::ConfoundedSeries raw = condcov::load_dataset(args.input, map, fmt);
  return condcov::fill_missing_linear(raw);
}

struct ResolvedEstimator {
  condcov::EstimatorConfig config;
  std::optional<condcov::BandwidthSelection> selection;
};

ResolvedEstimator resolve_estimator(const EstimatorOptions& options,
                                    const condcov::ConfoundedSeries& series) {
  ResolvedEstimator resolved;
  const condcov::KernelFamily family = condcov::kernel_family_from_string(options.kernel);
  const condcov::MeanMethod method = condcov::mean_method_from_string(options.mean_method);
  double h = options.bandwidth;
  if (!options.candidates.empty()) {
    resolved.selection =
        condcov::select_bandwidth_cv(series, options.candidates, method, options.folds, family);
    h = resolved.selection->chosen;
  }
  if (!(h > 0.0)) {
    throw Error(Errc::invalid_argument,
                "--bandwidth must be positive (or pass --candidates for cross-validation)");
  }
  resolved.config.cov_kernel = {family, h};
  resolved.config.mean_kernel = {family,
                                 options.mean_bandwidth > 0.0 ? options.mean_bandwidth : h};
  resolved.config.mean_method = method;
  return resolved;
}

std::optional<std::pair<double, double>> resolve_range(double lo, double hi) {
  const bool has_lo = std::isfinite(lo);
  const bool has_hi = std::isfinite(hi);
  if (has_lo != has_hi) {
    throw Error(Errc::invalid_argument, "--grid-min and --grid-max must be given together");
  }
  if (!has_lo) return std::nullopt;
  return std::make_pair(lo, hi);
}

void write_artifacts(const std::string& out_dir, const Artifacts& artifacts) {
  for (const auto& [name, content] : artifacts.files) {
    condcov::csv::write_file((std::filesystem::path(out_dir) / name).string(), content);
  }
}

// ---------------------------------------------------------------------------
// Subcommand bodies. Each returns the artifacts to be written on success.
// ---------------------------------------------------------------------------

Artifacts run_estimate(const EstimateArgs& args) {
  Artifacts artifacts;
  const condcov::ConfoundedSeries series = load_and_fill(args);
  const ResolvedEstimator resolved = resolve_estimator(args.estimator, series);
  const condcov::EvaluationGrid grid = condcov::resolve_grid(
      series, args.estimator.grid, resolve_range(args.estimator.grid_min, args.estimator.grid_max));

  const condcov::MeanField mean =
      condcov::estimate_mean(series, resolved.config.mean_kernel, resolved.config.mean_method);
  const condcov::CovarianceField field =
      condcov::estimate_conditional_covariance(series, mean, resolved.config.cov_kernel, grid);

  artifacts.add("field_covariance.csv", condcov::to_delimited(field));
  artifacts.add("field_covariance.json", condcov::to_structured(field));
  if (args.svg) {
    artifacts.add("field_covariance.svg", condcov::render_field_plot_svg(field));
  }
  if (args.correlation) {
    const condcov::CorrelationResult corr = condcov::covariance_to_correlation(field);
    artifacts.add("field_correlation.csv", condcov::to_delimited(corr.field));
    artifacts.add("field_correlation.json", condcov::to_structured(corr.field));
    if (args.svg) {
      artifacts.add("field_correlation.svg", condcov::render_field_plot_svg(corr.field));
    }
  }
  if (resolved.selection) {
    json cv;
    cv["chosen"] = resolved.selection->chosen;
    cv["candidates"] = resolved.selection->candidates;
    json scores = json::array();
    for (std::size_t i = 0; i < resolved.selection->scores.size(); ++i) {
      scores.push_back(resolved.selection->degenerate[i]
                           ? json(nullptr)
                           : json(resolved.selection->scores[i]));
    }
    cv["scores"] = scores;
    artifacts.add("bandwidth_cv.json", cv.dump(2) + "\n");
  }
  return artifacts;
}

Artifacts run_band(const BandArgs& args) {
  Artifacts artifacts;
  const condcov::ConfoundedSeries series = load_and_fill(args.base);
  const ResolvedEstimator resolved = resolve_estimator(args.base.estimator, series);

  condcov::BandPipelineConfig config;
  config.estimator = resolved.config;
  config.bootstrap.mode = condcov::block_mode_from_string(args.mode);
  config.bootstrap.span = condcov::block_span_from_string(args.span);
  config.bootstrap.replicates = args.replicates;
  config.bootstrap.alpha = args.alpha;
  config.bootstrap.seed = args.seed;
  config.grid_points = args.base.estimator.grid;
  config.grid_range = resolve_range(args.base.estimator.grid_min, args.base.estimator.grid_max);
  config.correlation = args.base.correlation;
  config.band_type = condcov::band_type_from_string(args.band_type);
  config.workers = args.base.workers;

  const condcov::BandPipelineResult result = condcov::run_band_pipeline(series, config);

  artifacts.add("field_covariance.csv", condcov::to_delimited(result.field));
  artifacts.add("field_covariance.json", condcov::to_structured(result.field));
  artifacts.add("bands_covariance.csv", condcov::to_delimited(result.covariance_bands));
  artifacts.add("bands_covariance.json", condcov::to_structured(result.covariance_bands));
  if (args.base.svg) {
    artifacts.add("bands_covariance.svg", condcov::render_band_plot_svg(result.covariance_bands));
  }
  if (result.correlation_bands) {
    artifacts.add("bands_correlation.csv", condcov::to_delimited(*result.correlation_bands));
    artifacts.add("bands_correlation.json", condcov::to_structured(*result.correlation_bands));
    if (args.base.svg) {
      artifacts.add("bands_correlation.svg",
                    condcov::render_band_plot_svg(*result.correlation_bands));
    }
  }
  return artifacts;
}

Artifacts run_simulate(const SimulateArgs& args) {
  Artifacts artifacts;
  const condcov::ScenarioSpec scenario = condcov::scenario_functions(args.scenario);
  const condcov::TemperatureModel model;
  condcov::rng::Xoshiro256pp temp_rng =
      condcov::rng::Xoshiro256pp::substream(args.seed, {condcov::rng::kStreamStudyTemperature, 0});
  const condcov::TemperatureSeries temps = condcov::simulate_temperature(
      model, args.days, args.samples_per_day, temp_rng, args.start_day);
  condcov::rng::Xoshiro256pp out_rng =
      condcov::rng::Xoshiro256pp::substream(args.seed, {condcov::rng::kStreamStudyOutputs, 0});
  const condcov::ConfoundedSeries series = condcov::simulate_outputs(scenario, temps, out_rng);

  condcov::ColumnMap map;
  map.time_column = "time";
  map.confounder_column = "temp";
  map.output_columns = {"y1", "y2"};
  artifacts.add("dataset.csv",
                condcov::dataset_to_csv(series, map,
                                        condcov::time_format_from_string(args.time_format)));
  return artifacts;
}

Artifacts run_coverage(const CoverageArgs& args) {
  Artifacts artifacts;
  condcov::StudyConfig config;
  config.scenario = condcov::scenario_functions(args.scenario);
  config.datasets = args.datasets;
  config.replicates = args.replicates;
  config.days = args.days;
  config.samples_per_day = args.samples_per_day;
  config.start_day = args.start_day;
  config.grid_points = args.grid;
  config.grid_range = resolve_range(args.grid_min, args.grid_max);
  const condcov::KernelFamily family = condcov::kernel_family_from_string(args.kernel);
  const double mean_h = args.mean_bandwidth > 0.0 ? args.mean_bandwidth : args.bandwidth;
  config.estimator.cov_kernel = {family, args.bandwidth};
  config.estimator.mean_kernel = {family, mean_h};
  config.estimator.mean_method = condcov::mean_method_from_string(args.mean_method);
  if (args.modes == "both") {
    config.modes = {condcov::BlockMode::disjoint, condcov::BlockMode::moving};
  } else {
    config.modes = {condcov::block_mode_from_string(args.modes)};
  }
  config.disjoint_span = condcov::block_span_from_string(args.span);
  config.moving_tau = args.moving_tau;
  config.seed = args.seed;
  config.workers = args.workers;

  const condcov::CoverageReport report = condcov::run_coverage_study(config);
  artifacts.add("coverage_report.csv", condcov::coverage_report_csv(report));
  return artifacts;
}

// ---------------------------------------------------------------------------
// Runner: manifest first, artifacts only on success, error log otherwise.
// ---------------------------------------------------------------------------

int execute(const std::string& command, const json& options, const std::string& out_dir,
            const std::function<Artifacts()>& body) {
  std::filesystem::create_directories(out_dir);
  json manifest;
  manifest["command"] = command;
  manifest["version"] = condcov::kVersion;
  manifest["options"] = options;
  condcov::csv::write_file((std::filesystem::path(out_dir) / "manifest.json").string(),
                           manifest.dump(2) + "\n");
  try {
    const Artifacts artifacts = body();
    write_artifacts(out_dir, artifacts);
    return 0;
  } catch (const Error& err) {
    condcov::csv::write_file((std::filesystem::path(out_dir) / "error.log").string(),
                             std::string(err.what()) + "\n");
    std::cerr << "error: " << err.what() << "\n";
    return err.is_config() ? 1 : 2;
  } catch (const std::exception& err) {
    condcov::csv::write_file((std::filesystem::path(out_dir) / "error.log").string(),
                             std::string(err.what()) + "\n");
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
}

int dispatch_manifest(const json& manifest, const std::optional<std::string>& out_override);

int run_from_args(const std::string& command, const json& options) {
  if (command == "estimate") {
    EstimateArgs args;
    from_json_args(options, args);
    return execute(command, options, args.out, [&] { return run_estimate(args); });
  }
  if (command == "band") {
    BandArgs args;
    from_json_args(options, args);
    return execute(command, options, args.base.out, [&] { return run_band(args); });
  }
  if (command == "simulate") {
    SimulateArgs args;
    from_json_args(options, args);
    return execute(command, options, args.out, [&] { return run_simulate(args); });
  }
  if (command == "coverage") {
    CoverageArgs args;
    from_json_args(options, args);
    return execute(command, options, args.out, [&] { return run_coverage(args); });
  }
  std::cerr << "error: unknown command '" << command << "' in manifest\n";
  return 1;
}

int dispatch_manifest(const json& manifest, const std::optional<std::string>& out_override) {
  const std::string command = manifest.at("command").get<std::string>();
  json options = manifest.at("options");
  if (out_override) options["out"] = *out_override;
  return run_from_args(command, options);
}

// ---------------------------------------------------------------------------

void add_column_options(CLI::App* cmd, ColumnOptions& c) {
  cmd->add_option("--time-column", c.time_column, "Header name of the timestamp column");
  cmd->add_option("--confounder-column", c.confounder_column,
                  "Header name of the confounder column");
  cmd->add_option("--output-columns", c.output_columns,
                  "Output column names (default: every remaining column)")
      ->delimiter(',');
  cmd->add_option("--time-format", c.time_format, "Timestamp format: iso or epoch")
      ->check(CLI::IsMember({"iso", "epoch"}));
}

void add_estimator_options(CLI::App* cmd, EstimatorOptions& e, bool bandwidth_required) {
  cmd->add_option("--kernel", e.kernel, "Kernel family: gaussian or epanechnikov")
      ->check(CLI::IsMember({"gaussian", "epanechnikov"}));
  auto* bw = cmd->add_option("--bandwidth", e.bandwidth, "Kernel bandwidth h")
                 ->check(CLI::PositiveNumber);
  cmd->add_option("--mean-bandwidth", e.mean_bandwidth,
                  "Separate bandwidth for the mean fit (default: same as --bandwidth)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--mean", e.mean_method, "Mean estimator: nadaraya-watson (nw) or local-linear (ll)");
  auto* cand = cmd->add_option("--candidates", e.candidates,
                               "Bandwidth candidates for cross-validation")
                   ->delimiter(',');
  cmd->add_option("--folds", e.folds, "Cross-validation folds")->check(CLI::Range(2, 1000000));
  cmd->add_option("--grid", e.grid, "Number of evaluation grid points")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--grid-min", e.grid_min, "Grid lower bound (default: data minimum)");
  cmd->add_option("--grid-max", e.grid_max, "Grid upper bound (default: data maximum)");
  if (bandwidth_required) {
    // The flag itself stays optional so --candidates can replace it; the
    // resolver rejects runs that provide neither.
    bw->excludes(cand);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conditional covariance and correlation estimation with block-bootstrap bands"};
  app.set_version_flag("--version", condcov::kVersion);
  app.set_config("--config", "", "Optional key=value configuration file (flags override it)");
  app.require_subcommand(0, 1);

  EstimateArgs estimate_args;
  BandArgs band_args;
  SimulateArgs simulate_args;
  CoverageArgs coverage_args;
  std::string manifest_path;
  std::string rerun_out;

  CLI::App* estimate = app.add_subcommand("estimate", "Estimate a conditional covariance field");
  estimate->add_option("--input", estimate_args.input, "Input CSV file")->required();
  add_column_options(estimate, estimate_args.columns);
  add_estimator_options(estimate, estimate_args.estimator, true);
  estimate->add_flag("--correlation,!--no-correlation", estimate_args.correlation,
                     "Also export the correlation field");
  estimate->add_flag("--svg,!--no-svg", estimate_args.svg, "Render field plots");
  estimate->add_option("--out", estimate_args.out, "Output directory");
  estimate->add_option("--workers", estimate_args.workers, "Worker thread count")
      ->check(CLI::PositiveNumber);

  CLI::App* band = app.add_subcommand("band", "Estimate plus bootstrap confidence bands");
  band->add_option("--input", band_args.base.input, "Input CSV file")->required();
  add_column_options(band, band_args.base.columns);
  add_estimator_options(band, band_args.base.estimator, true);
  band->add_option("--mode", band_args.mode, "Bootstrap mode: disjoint or moving")
      ->check(CLI::IsMember({"disjoint", "moving"}));
  band->add_option("--span", band_args.span, "Block span: row count, 'day', or 'week'");
  band->add_option("--replicates", band_args.replicates, "Bootstrap replicates (kappa)")
      ->check(CLI::Range(2, 1000000000));
  band->add_option("--alpha", band_args.alpha, "Miscoverage level alpha")
      ->check(CLI::Range(1e-9, 0.999999));
  band->add_option("--band-type", band_args.band_type, "Band construction: normal or percentile")
      ->check(CLI::IsMember({"normal", "percentile"}));
  band->add_option("--seed", band_args.seed, "RNG seed");
  band->add_flag("--correlation,!--no-correlation", band_args.base.correlation,
                 "Also export correlation bands");
  band->add_flag("--svg,!--no-svg", band_args.base.svg, "Render band plots");
  band->add_option("--out", band_args.base.out, "Output directory");
  band->add_option("--workers", band_args.base.workers, "Worker thread count")
      ->check(CLI::PositiveNumber);

  CLI::App* simulate = app.add_subcommand("simulate", "Write a synthetic scenario dataset");
  simulate->add_option("--scenario", simulate_args.scenario, "Scenario: A, B, or constant");
  simulate->add_option("--days", simulate_args.days, "Days to simulate")->check(CLI::PositiveNumber);
  simulate->add_option("--samples-per-day", simulate_args.samples_per_day, "Samples per day")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--start-day", simulate_args.start_day, "Day of year the series starts on")
      ->check(CLI::Range(1, 365));
  simulate->add_option("--seed", simulate_args.seed, "RNG seed");
  simulate->add_option("--time-format", simulate_args.time_format, "Timestamp format: iso or epoch")
      ->check(CLI::IsMember({"iso", "epoch"}));
  simulate->add_option("--out", simulate_args.out, "Output directory");

  CLI::App* coverage = app.add_subcommand("coverage", "Monte Carlo coverage study");
  coverage->add_option("--scenario", coverage_args.scenario, "Scenario: A, B, or constant");
  coverage->add_option("--datasets", coverage_args.datasets, "Simulated datasets (R)")
      ->check(CLI::PositiveNumber);
  coverage->add_option("--replicates", coverage_args.replicates, "Bootstrap replicates (kappa)")
      ->check(CLI::Range(2, 1000000000));
  coverage->add_option("--days", coverage_args.days, "Days per dataset")->check(CLI::PositiveNumber);
  coverage->add_option("--samples-per-day", coverage_args.samples_per_day, "Samples per day")
      ->check(CLI::PositiveNumber);
  coverage->add_option("--start-day", coverage_args.start_day, "Day of year each series starts on")
      ->check(CLI::Range(1, 365));
  coverage->add_option("--grid", coverage_args.grid, "Evaluation grid points")
      ->check(CLI::PositiveNumber);
  coverage->add_option("--grid-min", coverage_args.grid_min, "Grid lower bound");
  coverage->add_option("--grid-max", coverage_args.grid_max, "Grid upper bound");
  coverage->add_option("--kernel", coverage_args.kernel, "Kernel family")
      ->check(CLI::IsMember({"gaussian", "epanechnikov"}));
  coverage->add_option("--bandwidth", coverage_args.bandwidth, "Kernel bandwidth h")
      ->check(CLI::PositiveNumber);
  coverage->add_option("--mean-bandwidth", coverage_args.mean_bandwidth,
                       "Separate bandwidth for the mean fit")
      ->check(CLI::PositiveNumber);
  coverage->add_option("--mean", coverage_args.mean_method, "Mean estimator: nw or ll");
  coverage->add_option("--modes", coverage_args.modes, "Bootstrap modes: disjoint, moving, or both")
      ->check(CLI::IsMember({"disjoint", "moving", "both"}));
  coverage->add_option("--span", coverage_args.span, "Disjoint block span: rows, 'day', or 'week'");
  coverage->add_option("--moving-tau", coverage_args.moving_tau,
                       "Moving-block tau in rows (default: samples per day)");
  coverage->add_option("--seed", coverage_args.seed, "RNG seed");
  coverage->add_option("--out", coverage_args.out, "Output directory");
  coverage->add_option("--workers", coverage_args.workers, "Worker thread count")
      ->check(CLI::PositiveNumber);

  CLI::App* rerun = app.add_subcommand("rerun", "Replay a run from its manifest");
  rerun->add_option("--manifest", manifest_path, "Path to a manifest.json")->required();
  rerun->add_option("--out", rerun_out, "Override the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (estimate->parsed()) return run_from_args("estimate", to_json(estimate_args));
    if (band->parsed()) return run_from_args("band", to_json(band_args));
    if (simulate->parsed()) return run_from_args("simulate", to_json(simulate_args));
    if (coverage->parsed()) return run_from_args("coverage", to_json(coverage_args));
    if (rerun->parsed()) {
      const json manifest = json::parse(condcov::csv::read_file(manifest_path));
      return dispatch_manifest(manifest, rerun_out.empty()
                                             ? std::nullopt
                                             : std::optional<std::string>(rerun_out));
    }
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return err.is_config() ? 1 : 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }

  std::cout << app.help();
  return 0;
}
