#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "condcov/series.hpp"

namespace condcov {

enum class BlockMode { disjoint, moving };

const char* to_string(BlockMode mode);
BlockMode block_mode_from_string(const std::string& name);

/// Block extent, either a fixed row count or a calendar unit resolved
/// against the series timestamps.
struct BlockSpan {
  enum class Unit { rows, day, week };
  Unit unit = Unit::rows;
  Eigen::Index count = 1;  // rows: block length L (disjoint) or tau (moving)

  static BlockSpan rows(Eigen::Index n) { return {Unit::rows, n}; }
  static BlockSpan calendar_day() { return {Unit::day, 1}; }
  static BlockSpan calendar_week() { return {Unit::week, 1}; }
};

BlockSpan block_span_from_string(const std::string& text);
std::string to_string(const BlockSpan& span);

/// A contiguous run of 0-based row indices, [begin, end).
struct IndexBlock {
  Eigen::Index begin = 0;
  Eigen::Index end = 0;

  Eigen::Index length() const { return end - begin; }
};

/// Row-index blocks over a series of n rows. Disjoint mode partitions
/// 1..n into consecutive blocks (a short final block is kept); moving mode
/// holds the n - tau overlapping windows {k, ..., k + tau}.
struct BlockPlan {
  std::vector<IndexBlock> blocks;
  BlockMode mode = BlockMode::disjoint;
  Eigen::Index span = 1;  // resolved rows: L for disjoint, tau for moving
  Eigen::Index n = 0;

  Eigen::Index block_count() const { return static_cast<Eigen::Index>(blocks.size()); }
  double mean_block_length() const;
};

/// Builds the plan for `series`. Calendar spans group rows by UTC day or
/// week for disjoint mode; for moving mode the unit is converted to a row
/// count via the median timestamp spacing. Throws SpanTooLarge when L > n
/// (disjoint) or tau >= n (moving), EmptyCalendarBlocks when the timestamps
/// span less than one calendar unit.
BlockPlan build_block_plan(const ConfoundedSeries& series, BlockMode mode, const BlockSpan& span);

/// Asserts the structural invariants (coverage of 1..n, contiguity, moving
/// block count and lengths, disjoint partition). Throws InvalidArgument.
void validate_plan(const BlockPlan& plan);

}  // namespace condcov
