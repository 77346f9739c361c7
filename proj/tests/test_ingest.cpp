#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "condcov/csv.hpp"
#include "condcov/error.hpp"
#include "condcov/ingest.hpp"
#include "helpers.hpp"

using condcov::ColumnMap;
using condcov::Errc;
using condcov::Error;
using condcov::TimeFormat;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  condcov::csv::write_file(path, content);
  return path;
}

}  // namespace

TEST_CASE("csv parser handles quoting") {
  const auto rows = condcov::csv::parse("a,\"b,c\",\"d\"\"e\"\r\n1,\"two\nlines\",3\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][1] == "b,c");
  CHECK(rows[0][2] == "d\"e");
  CHECK(rows[1][1] == "two\nlines");
  CHECK_THROWS_AS(condcov::csv::parse("a,\"unterminated\n"), Error);
}

TEST_CASE("csv field escaping round-trips") {
  for (const std::string field : {"plain", "with,comma", "with\"quote", "multi\nline"}) {
    const auto rows = condcov::csv::parse(condcov::csv::escape_field(field) + "\n");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0][0] == field);
  }
}

TEST_CASE("well-formed file with one blank cell gets a mask") {
  const auto path = temp_file("condcov_blank.csv",
                              "time,temp,f1,f2\n"
                              "0,1.5,2.0,3.0\n"
                              "3600,1.6,,3.1\n"
                              "7200,1.7,2.2,3.2\n");
  const auto series = condcov::load_dataset(path, ColumnMap{}, TimeFormat::epoch_seconds);
  REQUIRE(series.rows() == 3);
  REQUIRE(series.channels() == 2);
  REQUIRE(series.missing.has_value());
  CHECK(series.missing->outputs(1, 0));
  CHECK_FALSE(series.missing->outputs(1, 1));
  CHECK(series.outputs(2, 1) == 3.2);
}

TEST_CASE("missing header column is reported by name") {
  const auto path = temp_file("condcov_nocol.csv", "time,f1\n0,1\n");
  try {
    condcov::load_dataset(path, ColumnMap{}, TimeFormat::epoch_seconds);
    FAIL("expected MissingColumn");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::missing_column);
    CHECK(std::string(err.what()).find("temp") != std::string::npos);
  }
}

TEST_CASE("rows out of time order are sorted on load") {
  const auto path = temp_file("condcov_order.csv",
                              "time,temp,f1\n"
                              "7200,3.0,30\n"
                              "0,1.0,10\n"
                              "3600,2.0,20\n");
  const auto series = condcov::load_dataset(path, ColumnMap{}, TimeFormat::epoch_seconds);
  CHECK(series.timestamps == std::vector<std::int64_t>{0, 3600, 7200});
  CHECK(series.outputs(0, 0) == 10);
  CHECK(series.outputs(2, 0) == 30);
}

TEST_CASE("duplicate timestamps are rejected") {
  const auto path = temp_file("condcov_dup.csv", "time,temp,f1\n0,1,1\n0,2,2\n");
  try {
    condcov::load_dataset(path, ColumnMap{}, TimeFormat::epoch_seconds);
    FAIL("expected DuplicateTimestamp");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::duplicate_timestamp);
  }
}

TEST_CASE("unparseable time cells name the row and column") {
  const auto path = temp_file("condcov_badtime.csv", "time,temp,f1\n0,1,1\noops,2,2\n");
  try {
    condcov::load_dataset(path, ColumnMap{}, TimeFormat::epoch_seconds);
    FAIL("expected UnparseableCell");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::unparseable_cell);
    CHECK(std::string(err.what()).find("row 2") != std::string::npos);
    CHECK(std::string(err.what()).find("time") != std::string::npos);
  }
}

TEST_CASE("iso-8601 parsing and formatting") {
  CHECK(condcov::parse_iso8601("2018-10-02T14:00:00") == 1538488800);
  CHECK(condcov::parse_iso8601("2018-10-02 14:00:00Z") == 1538488800);
  CHECK(condcov::parse_iso8601("1970-01-01T00:00:00") == 0);
  CHECK(condcov::format_iso8601(1538488800) == "2018-10-02T14:00:00");
  for (const std::int64_t t : {0LL, 1538488800LL, 86399LL, 1234567890LL}) {
    CHECK(condcov::parse_iso8601(condcov::format_iso8601(t)) == t);
  }
  CHECK_THROWS_AS(condcov::parse_iso8601("not a date"), Error);
}

TEST_CASE("interior gaps interpolate linearly in time") {
  auto series = testutil::make_series(Eigen::MatrixXd::Zero(3, 1), Eigen::VectorXd::Zero(3));
  series.outputs << 1.0, -1.0, 3.0;
  condcov::MissingMask mask{
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(3, 1, false),
      Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(3, false)};
  mask.outputs(1, 0) = true;
  series.missing = mask;
  const auto filled = condcov::fill_missing_linear(series);
  CHECK(filled.outputs(1, 0) == doctest::Approx(2.0));
  CHECK_FALSE(filled.missing.has_value());
}

TEST_CASE("interpolation uses timestamp spacing, not row index") {
  auto series = testutil::make_series(Eigen::MatrixXd::Zero(3, 1), Eigen::VectorXd::Zero(3));
  series.outputs << 0.0, 99.0, 10.0;
  series.timestamps = {0, 9, 10};
  condcov::MissingMask mask{
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(3, 1, false),
      Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(3, false)};
  mask.outputs(1, 0) = true;
  series.missing = mask;
  const auto filled = condcov::fill_missing_linear(series);
  CHECK(filled.outputs(1, 0) == doctest::Approx(9.0));
}

TEST_CASE("leading gaps extend the nearest value") {
  auto series = testutil::make_series(Eigen::MatrixXd::Zero(3, 1), Eigen::VectorXd::Zero(3));
  series.outputs << -42.0, 5.0, 7.0;
  condcov::MissingMask mask{
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(3, 1, false),
      Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(3, false)};
  mask.outputs(0, 0) = true;
  series.missing = mask;
  const auto filled = condcov::fill_missing_linear(series);
  CHECK(filled.outputs(0, 0) == 5.0);
  CHECK(filled.outputs(1, 0) == 5.0);
  CHECK(filled.outputs(2, 0) == 7.0);
}

TEST_CASE("no missing cells is a no-op") {
  condcov::rng::Xoshiro256pp rng(1);
  const auto series = testutil::random_series(10, 2, rng);
  const auto filled = condcov::fill_missing_linear(series);
  CHECK(filled.outputs == series.outputs);
  CHECK(filled.confounder == series.confounder);
}

TEST_CASE("a column with no observed values is rejected") {
  auto series = testutil::make_series(Eigen::MatrixXd::Zero(2, 1), Eigen::VectorXd::Zero(2));
  condcov::MissingMask mask{
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(2, 1, true),
      Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(2, false)};
  series.outputs.setConstant(std::numeric_limits<double>::quiet_NaN());
  series.missing = mask;
  try {
    condcov::fill_missing_linear(series);
    FAIL("expected ColumnAllMissing");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::column_all_missing);
  }
}

TEST_CASE("interpolation is idempotent and conservative") {
  condcov::rng::Xoshiro256pp rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 10 + static_cast<Eigen::Index>(rng.next_below(40));
    auto series = testutil::random_series(n, 2, rng);
    condcov::MissingMask mask{
        Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, 2, false),
        Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, false)};
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < 2; ++j) {
        if (rng.next_unit() < 0.3) {
          mask.outputs(i, j) = true;
          series.outputs(i, j) = std::numeric_limits<double>::quiet_NaN();
        }
      }
    }
    if (!(mask.outputs.col(0).count() < n && mask.outputs.col(1).count() < n)) continue;
    series.missing = mask;

    const auto once = condcov::fill_missing_linear(series);
    const auto twice = condcov::fill_missing_linear(once);
    CHECK(once.outputs == twice.outputs);

    for (Eigen::Index j = 0; j < 2; ++j) {
      double lo = 1e300, hi = -1e300;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!mask.outputs(i, j)) {
          lo = std::min(lo, once.outputs(i, j));
          hi = std::max(hi, once.outputs(i, j));
        }
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        CHECK(once.outputs(i, j) >= lo);
        CHECK(once.outputs(i, j) <= hi);
      }
    }
  }
}

TEST_CASE("dataset write and load round-trips exactly") {
  condcov::rng::Xoshiro256pp rng(11);
  const auto series = testutil::random_series(25, 3, rng);
  ColumnMap map;
  map.output_columns = {"f1", "f2", "f3"};
  for (const auto format : {TimeFormat::epoch_seconds, TimeFormat::iso8601}) {
    const auto path = temp_file("condcov_roundtrip.csv", "");
    condcov::write_dataset(series, path, map, format);
    const auto loaded = condcov::load_dataset(path, map, format);
    CHECK(loaded.outputs == series.outputs);
    CHECK(loaded.confounder == series.confounder);
    CHECK(loaded.timestamps == series.timestamps);
    CHECK_FALSE(loaded.missing.has_value());
  }
}
