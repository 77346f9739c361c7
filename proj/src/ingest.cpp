#include "condcov/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <set>
#include <string>

#include "condcov/csv.hpp"
#include "condcov/error.hpp"
#include "condcov/format.hpp"

namespace condcov {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

bool parse_strict_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = begin + t.size();
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc{} && result.ptr == end;
}

bool parse_strict_int(const std::string& text, std::int64_t& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = begin + t.size();
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc{} && result.ptr == end;
}

// Days from 1970-01-01 for a proleptic Gregorian civil date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = yy + (m <= 2);
}

Eigen::Index find_column(const csv::Row& header, const std::string& name) {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (trim(header[j]) == name) return static_cast<Eigen::Index>(j);
  }
  throw Error(Errc::missing_column, "header has no column named '" + name + "'");
}

}  // namespace

void validate_column_map(const ColumnMap& map) {
  if (map.time_column.empty() || map.confounder_column.empty()) {
    throw Error(Errc::invalid_argument, "time and confounder column names must be set");
  }
  std::set<std::string> seen{map.time_column, map.confounder_column};
  if (seen.size() != 2) {
    throw Error(Errc::invalid_argument, "column names must be distinct");
  }
  for (const auto& name : map.output_columns) {
    if (name.empty() || !seen.insert(name).second) {
      throw Error(Errc::invalid_argument, "column names must be distinct and nonempty");
    }
  }
}

const char* to_string(TimeFormat format) {
  return format == TimeFormat::iso8601 ? "iso" : "epoch";
}

TimeFormat time_format_from_string(const std::string& name) {
  if (name == "iso" || name == "iso8601") return TimeFormat::iso8601;
  if (name == "epoch" || name == "epoch-seconds") return TimeFormat::epoch_seconds;
  throw Error(Errc::invalid_argument, "unknown time format '" + name + "'");
}

std::int64_t parse_iso8601(const std::string& text) {
  std::string t = trim(text);
  if (!t.empty() && (t.back() == 'Z' || t.back() == 'z')) t.pop_back();
  int year = 0;
  unsigned month = 0, day = 0, hour = 0, minute = 0, second = 0;
  char sep = 0;
  const int got = std::sscanf(t.c_str(), "%d-%u-%u%c%u:%u:%u", &year, &month, &day, &sep, &hour,
                              &minute, &second);
  if (got < 3 || (got > 3 && sep != 'T' && sep != ' ') || month < 1 || month > 12 || day < 1 ||
      day > 31 || hour > 23 || minute > 59 || second > 60) {
    throw Error(Errc::unparseable_cell, "cannot parse '" + text + "' as an ISO-8601 time");
  }
  return days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second;
}

std::string format_iso8601(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / 86400;
  std::int64_t rem = epoch_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  std::int64_t year;
  unsigned month, day;
  civil_from_days(days, year, month, day);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lld",
                static_cast<long long>(year), month, day, static_cast<long long>(rem / 3600),
                static_cast<long long>((rem / 60) % 60), static_cast<long long>(rem % 60));
  return buf;
}

ConfoundedSeries load_dataset(const std::string& path, const ColumnMap& map, TimeFormat format) {
  validate_column_map(map);
  const std::vector<csv::Row> rows = csv::parse(csv::read_file(path));
  if (rows.empty()) throw Error(Errc::io_failure, "'" + path + "' is empty");

  const csv::Row& header = rows.front();
  const Eigen::Index time_col = find_column(header, map.time_column);
  const Eigen::Index conf_col = find_column(header, map.confounder_column);

  std::vector<std::string> output_names = map.output_columns;
  if (output_names.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      const std::string name = trim(header[j]);
      if (static_cast<Eigen::Index>(j) != time_col && static_cast<Eigen::Index>(j) != conf_col) {
        output_names.push_back(name);
      }
    }
    if (output_names.empty()) {
      throw Error(Errc::missing_column, "no output columns remain beside time and confounder");
    }
  }
  std::vector<Eigen::Index> output_cols;
  output_cols.reserve(output_names.size());
  for (const auto& name : output_names) output_cols.push_back(find_column(header, name));

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size()) - 1;
  if (n < 1) throw Error(Errc::io_failure, "'" + path + "' has a header but no data rows");
  const Eigen::Index p = static_cast<Eigen::Index>(output_cols.size());

  struct Parsed {
    std::int64_t time;
    Eigen::Index source_row;
  };
  std::vector<Parsed> order(static_cast<std::size_t>(n));

  for (Eigen::Index r = 0; r < n; ++r) {
    const csv::Row& row = rows[static_cast<std::size_t>(r + 1)];
    if (row.size() != header.size()) {
      throw Error(Errc::unparseable_cell, "row " + std::to_string(r + 1) + " has " +
                                              std::to_string(row.size()) + " fields, expected " +
                                              std::to_string(header.size()));
    }
    const std::string& cell = row[static_cast<std::size_t>(time_col)];
    std::int64_t t = 0;
    if (format == TimeFormat::iso8601) {
      try {
        t = parse_iso8601(cell);
      } catch (const Error&) {
        throw Error(Errc::unparseable_cell, "row " + std::to_string(r + 1) + ", column '" +
                                                map.time_column + "': cannot parse '" + cell + "'");
      }
    } else if (!parse_strict_int(cell, t)) {
      throw Error(Errc::unparseable_cell, "row " + std::to_string(r + 1) + ", column '" +
                                              map.time_column + "': cannot parse '" + cell + "'");
    }
    order[static_cast<std::size_t>(r)] = {t, r};
  }

  std::stable_sort(order.begin(), order.end(),
                   [](const Parsed& a, const Parsed& b) { return a.time < b.time; });
  for (Eigen::Index r = 1; r < n; ++r) {
    if (order[static_cast<std::size_t>(r)].time == order[static_cast<std::size_t>(r - 1)].time) {
      throw Error(Errc::duplicate_timestamp,
                  "duplicate timestamp t=" + std::to_string(order[static_cast<std::size_t>(r)].time));
    }
  }

  ConfoundedSeries series;
  series.outputs.resize(n, p);
  series.confounder.resize(n);
  series.timestamps.resize(static_cast<std::size_t>(n));
  MissingMask mask{Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, p, false),
                   Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, false)};
  bool any_missing = false;

  for (Eigen::Index i = 0; i < n; ++i) {
    const csv::Row& row = rows[static_cast<std::size_t>(order[static_cast<std::size_t>(i)].source_row + 1)];
    series.timestamps[static_cast<std::size_t>(i)] = order[static_cast<std::size_t>(i)].time;

    double value = 0.0;
    if (parse_strict_double(row[static_cast<std::size_t>(conf_col)], value) && std::isfinite(value)) {
      series.confounder(i) = value;
    } else {
      series.confounder(i) = kNaN;
      mask.confounder(i) = true;
      any_missing = true;
    }
    for (Eigen::Index j = 0; j < p; ++j) {
      const std::string& cell = row[static_cast<std::size_t>(output_cols[static_cast<std::size_t>(j)])];
      if (parse_strict_double(cell, value) && std::isfinite(value)) {
        series.outputs(i, j) = value;
      } else {
        series.outputs(i, j) = kNaN;
        mask.outputs(i, j) = true;
        any_missing = true;
      }
    }
  }
  if (any_missing) series.missing = std::move(mask);
  validate_series(series);
  return series;
}

namespace {

void fill_column(const std::vector<std::int64_t>& timestamps, Eigen::Index n,
                 const std::function<bool(Eigen::Index)>& is_missing,
                 const std::function<double(Eigen::Index)>& get,
                 const std::function<void(Eigen::Index, double)>& set,
                 const std::string& column_label) {
  std::vector<Eigen::Index> known;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!is_missing(i)) known.push_back(i);
  }
  if (known.empty()) {
    throw Error(Errc::column_all_missing, column_label + " has no observed values");
  }
  std::size_t next = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!is_missing(i)) continue;
    while (next < known.size() && known[next] < i) ++next;
    if (next == 0) {
      set(i, get(known.front()));  // leading gap: nearest value
    } else if (next == known.size()) {
      set(i, get(known.back()));  // trailing gap
    } else {
      const Eigen::Index a = known[next - 1];
      const Eigen::Index b = known[next];
      const double ta = static_cast<double>(timestamps[static_cast<std::size_t>(a)]);
      const double tb = static_cast<double>(timestamps[static_cast<std::size_t>(b)]);
      const double t = static_cast<double>(timestamps[static_cast<std::size_t>(i)]);
      const double va = get(a);
      const double vb = get(b);
      set(i, va + (vb - va) * ((t - ta) / (tb - ta)));
    }
  }
}

}  // namespace

ConfoundedSeries fill_missing_linear(const ConfoundedSeries& series) {
  validate_series(series);
  ConfoundedSeries out = series;
  if (!series.missing || !series.missing->any()) {
    out.missing.reset();
    return out;
  }
  const Eigen::Index n = series.rows();

  fill_column(
      out.timestamps, n, [&](Eigen::Index i) { return series.missing->confounder(i); },
      [&](Eigen::Index i) { return out.confounder(i); },
      [&](Eigen::Index i, double v) { out.confounder(i) = v; }, "confounder column");

  for (Eigen::Index j = 0; j < series.channels(); ++j) {
    fill_column(
        out.timestamps, n, [&](Eigen::Index i) { return series.missing->outputs(i, j); },
        [&](Eigen::Index i) { return out.outputs(i, j); },
        [&](Eigen::Index i, double v) { out.outputs(i, j) = v; },
        "output column " + std::to_string(j + 1));
  }

  out.missing.reset();
  validate_series(out);
  return out;
}

std::string dataset_to_csv(const ConfoundedSeries& series, const ColumnMap& map,
                           TimeFormat format) {
  validate_column_map(map);
  require_dense(series);
  if (static_cast<Eigen::Index>(map.output_columns.size()) != series.channels()) {
    throw Error(Errc::invalid_argument, "column map output count does not match the series");
  }
  std::string out = csv::escape_field(map.time_column) + "," +
                    csv::escape_field(map.confounder_column);
  for (const auto& name : map.output_columns) out += "," + csv::escape_field(name);
  out += "\n";
  for (Eigen::Index i = 0; i < series.rows(); ++i) {
    const std::int64_t t = series.timestamps[static_cast<std::size_t>(i)];
    out += format == TimeFormat::iso8601 ? format_iso8601(t) : std::to_string(t);
    out += "," + format_double_17g(series.confounder(i));
    for (Eigen::Index j = 0; j < series.channels(); ++j) {
      out += "," + format_double_17g(series.outputs(i, j));
    }
    out += "\n";
  }
  return out;
}

void write_dataset(const ConfoundedSeries& series, const std::string& path, const ColumnMap& map,
                   TimeFormat format) {
  csv::write_file(path, dataset_to_csv(series, map, format));
}

}  // namespace condcov
