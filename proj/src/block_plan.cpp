#include "condcov/block_plan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "condcov/error.hpp"

namespace condcov {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;
constexpr std::int64_t kSecondsPerWeek = 7 * kSecondsPerDay;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t median_spacing(const std::vector<std::int64_t>& ts) {
  std::vector<std::int64_t> gaps;
  gaps.reserve(ts.size() - 1);
  for (std::size_t i = 1; i < ts.size(); ++i) gaps.push_back(ts[i] - ts[i - 1]);
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  return gaps[gaps.size() / 2];
}

}  // namespace

const char* to_string(BlockMode mode) { return mode == BlockMode::disjoint ? "disjoint" : "moving"; }

BlockMode block_mode_from_string(const std::string& name) {
  if (name == "disjoint") return BlockMode::disjoint;
  if (name == "moving") return BlockMode::moving;
  throw Error(Errc::invalid_argument, "unknown block mode '" + name + "'");
}

BlockSpan block_span_from_string(const std::string& text) {
  if (text == "day") return BlockSpan::calendar_day();
  if (text == "week") return BlockSpan::calendar_week();
  try {
    std::size_t used = 0;
    const long long rows = std::stoll(text, &used);
    if (used != text.size() || rows < 1) throw std::invalid_argument(text);
    return BlockSpan::rows(static_cast<Eigen::Index>(rows));
  } catch (const std::exception&) {
    throw Error(Errc::invalid_argument,
                "span must be a positive row count, 'day', or 'week'; got '" + text + "'");
  }
}

std::string to_string(const BlockSpan& span) {
  switch (span.unit) {
    case BlockSpan::Unit::day: return "day";
    case BlockSpan::Unit::week: return "week";
    default: return std::to_string(span.count);
  }
}

double BlockPlan::mean_block_length() const {
  double total = 0.0;
  for (const auto& b : blocks) total += static_cast<double>(b.length());
  return blocks.empty() ? 0.0 : total / static_cast<double>(blocks.size());
}

BlockPlan build_block_plan(const ConfoundedSeries& series, BlockMode mode, const BlockSpan& span) {
  validate_series(series);
  const Eigen::Index n = series.rows();

  Eigen::Index resolved_rows = span.count;
  if (span.unit != BlockSpan::Unit::rows) {
    const std::int64_t unit_seconds =
        span.unit == BlockSpan::Unit::day ? kSecondsPerDay : kSecondsPerWeek;
    if (series.timestamps.back() - series.timestamps.front() < unit_seconds) {
      throw Error(Errc::empty_calendar_blocks,
                  "timestamps span less than one calendar " +
                      std::string(span.unit == BlockSpan::Unit::day ? "day" : "week"));
    }
    if (mode == BlockMode::moving) {
      // Moving windows need a row count; use the rows one unit covers at the
      // typical sampling cadence.
      const std::int64_t spacing = std::max<std::int64_t>(1, median_spacing(series.timestamps));
      resolved_rows = static_cast<Eigen::Index>(std::max<std::int64_t>(
          1, (unit_seconds + spacing / 2) / spacing));
    }
  }

  BlockPlan plan;
  plan.mode = mode;
  plan.n = n;

  if (mode == BlockMode::moving) {
    const Eigen::Index tau = resolved_rows;
    if (tau < 1) throw Error(Errc::invalid_argument, "moving span must be at least 1");
    if (tau >= n) {
      throw Error(Errc::span_too_large, "moving span " + std::to_string(tau) +
                                            " leaves no complete window in " + std::to_string(n) +
                                            " rows");
    }
    plan.span = tau;
    plan.blocks.reserve(n - tau);
    for (Eigen::Index k = 0; k + tau < n; ++k) plan.blocks.push_back({k, k + tau + 1});
    return plan;
  }

  // Disjoint mode.
  if (span.unit == BlockSpan::Unit::rows) {
    const Eigen::Index length = resolved_rows;
    if (length < 1) throw Error(Errc::invalid_argument, "block length must be at least 1");
    if (length > n) {
      throw Error(Errc::span_too_large, "block length " + std::to_string(length) +
                                            " exceeds the series length " + std::to_string(n));
    }
    plan.span = length;
    for (Eigen::Index begin = 0; begin < n; begin += length) {
      plan.blocks.push_back({begin, std::min(begin + length, n)});
    }
  } else {
    const std::int64_t unit_seconds =
        span.unit == BlockSpan::Unit::day ? kSecondsPerDay : kSecondsPerWeek;
    Eigen::Index begin = 0;
    std::int64_t current = floor_div(series.timestamps[0], unit_seconds);
    for (Eigen::Index i = 1; i < n; ++i) {
      const std::int64_t unit = floor_div(series.timestamps[i], unit_seconds);
      if (unit != current) {
        plan.blocks.push_back({begin, i});
        begin = i;
        current = unit;
      }
    }
    plan.blocks.push_back({begin, n});
    plan.span = static_cast<Eigen::Index>(std::llround(plan.mean_block_length()));
  }
  return plan;
}

void validate_plan(const BlockPlan& plan) {
  if (plan.blocks.empty()) throw Error(Errc::invalid_argument, "plan has no blocks");
  std::vector<int> covered(static_cast<std::size_t>(plan.n), 0);
  for (const auto& block : plan.blocks) {
    if (block.begin < 0 || block.end > plan.n || block.length() < 1) {
      throw Error(Errc::invalid_argument, "plan block out of bounds or empty");
    }
    for (Eigen::Index i = block.begin; i < block.end; ++i) ++covered[static_cast<std::size_t>(i)];
  }
  for (Eigen::Index i = 0; i < plan.n; ++i) {
    if (covered[static_cast<std::size_t>(i)] == 0) {
      throw Error(Errc::invalid_argument, "row " + std::to_string(i + 1) + " not covered by any block");
    }
  }
  if (plan.mode == BlockMode::moving) {
    if (plan.block_count() != plan.n - plan.span) {
      throw Error(Errc::invalid_argument, "moving plan must have n - tau blocks");
    }
    for (const auto& block : plan.blocks) {
      if (block.length() != plan.span + 1) {
        throw Error(Errc::invalid_argument, "moving block length must be tau + 1");
      }
    }
  } else {
    for (Eigen::Index i = 0; i < plan.n; ++i) {
      if (covered[static_cast<std::size_t>(i)] != 1) {
        throw Error(Errc::invalid_argument, "disjoint plan must cover each row exactly once");
      }
    }
    for (std::size_t b = 1; b < plan.blocks.size(); ++b) {
      if (plan.blocks[b].begin != plan.blocks[b - 1].end) {
        throw Error(Errc::invalid_argument, "disjoint blocks must be consecutive");
      }
    }
  }
}

}  // namespace condcov
