#pragma once

namespace condcov {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace condcov
