#pragma once

#include <string>
#include <vector>

#include "condcov/series.hpp"

namespace condcov {

/// Maps CSV header names onto the series layout. Output columns keep the
/// order given here.
struct ColumnMap {
  std::string time_column = "time";
  std::string confounder_column = "temp";
  std::vector<std::string> output_columns;  // empty: all remaining columns
};

void validate_column_map(const ColumnMap& map);

enum class TimeFormat { iso8601, epoch_seconds };

const char* to_string(TimeFormat format);
TimeFormat time_format_from_string(const std::string& name);

/// Parses the file, sorts rows by timestamp, and marks every empty or
/// non-numeric output/confounder cell in the missing mask. Duplicate
/// timestamps are rejected. Row numbers in errors are 1-based data rows
/// (the header is row 0).
ConfoundedSeries load_dataset(const std::string& path, const ColumnMap& map, TimeFormat format);

/// Fills interior gaps by linear interpolation in timestamp space, column
/// by column (confounder included); leading and trailing gaps are filled by
/// nearest-value extension. The result is dense and validated. Throws
/// ColumnAllMissing when a column has no observed value at all.
ConfoundedSeries fill_missing_linear(const ConfoundedSeries& series);

/// Writes a dense series using the column map's names; the inverse of
/// load_dataset for finite data (values are written round-trip exact).
std::string dataset_to_csv(const ConfoundedSeries& series, const ColumnMap& map, TimeFormat format);
void write_dataset(const ConfoundedSeries& series, const std::string& path, const ColumnMap& map,
                   TimeFormat format);

/// Epoch seconds <-> "YYYY-MM-DDTHH:MM:SS" (UTC).
std::int64_t parse_iso8601(const std::string& text);
std::string format_iso8601(std::int64_t epoch_seconds);

}  // namespace condcov
