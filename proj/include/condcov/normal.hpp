#pragma once

namespace condcov {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile for p in (0, 1). Newton iteration on the
/// erfc-based CDF from a rational starting guess; accurate to full double
/// precision for the central range used by confidence bands.
double normal_quantile(double p);

}  // namespace condcov
