#pragma once

#include <stdexcept>
#include <string>

namespace condcov {

/// Canonical error kinds raised by the library.
enum class Errc {
  // data model
  mismatched_lengths,
  non_finite_value,
  non_monotone_time,
  // estimation
  degenerate_weights,
  singular_local_fit,
  all_candidates_degenerate,
  variance_floor_hit,
  // bootstrap
  span_too_large,
  empty_calendar_blocks,
  too_many_failures,
  insufficient_replicates,
  grid_mismatch,
  // simulation
  unknown_scenario,
  non_psd_at_temperature,
  // ingestion / output
  missing_column,
  unparseable_cell,
  duplicate_timestamp,
  column_all_missing,
  io_failure,
  // configuration
  invalid_argument,
};

const char* errc_name(Errc code);

/// Whether an error kind reflects bad configuration or input (as opposed to a
/// failure discovered while estimating). The CLI maps the former to exit code
/// 1 and the latter to exit code 2.
bool errc_is_config(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }
  bool is_config() const noexcept { return errc_is_config(code_); }

 private:
  Errc code_;
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::mismatched_lengths: return "MismatchedLengths";
    case Errc::non_finite_value: return "NonFiniteValue";
    case Errc::non_monotone_time: return "NonMonotoneTime";
    case Errc::degenerate_weights: return "DegenerateWeights";
    case Errc::singular_local_fit: return "SingularLocalFit";
    case Errc::all_candidates_degenerate: return "AllCandidatesDegenerate";
    case Errc::variance_floor_hit: return "VarianceFloorHit";
    case Errc::span_too_large: return "SpanTooLarge";
    case Errc::empty_calendar_blocks: return "EmptyCalendarBlocks";
    case Errc::too_many_failures: return "TooManyFailures";
    case Errc::insufficient_replicates: return "InsufficientReplicates";
    case Errc::grid_mismatch: return "GridMismatch";
    case Errc::unknown_scenario: return "UnknownScenario";
    case Errc::non_psd_at_temperature: return "NonPSDAtTemperature";
    case Errc::missing_column: return "MissingColumn";
    case Errc::unparseable_cell: return "UnparseableCell";
    case Errc::duplicate_timestamp: return "DuplicateTimestamp";
    case Errc::column_all_missing: return "ColumnAllMissing";
    case Errc::io_failure: return "IoFailure";
    case Errc::invalid_argument: return "InvalidArgument";
  }
  return "UnknownError";
}

inline bool errc_is_config(Errc code) {
  switch (code) {
    case Errc::invalid_argument:
    case Errc::missing_column:
    case Errc::unparseable_cell:
    case Errc::duplicate_timestamp:
    case Errc::mismatched_lengths:
    case Errc::non_monotone_time:
    case Errc::unknown_scenario:
      return true;
    default:
      return false;
  }
}

}  // namespace condcov
