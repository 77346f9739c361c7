#include "condcov/normal.hpp"

#include <cmath>

#include "condcov/error.hpp"

namespace condcov {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// Abramowitz & Stegun 26.2.22 rational approximation for the upper-tail
// quantile, |error| < 4.5e-4. Used only as the Newton starting point.
double crude_upper_quantile(double tail_prob) {
  const double t = std::sqrt(-2.0 * std::log(tail_prob));
  return t - (2.30753 + 0.27061 * t) / (1.0 + 0.99229 * t + 0.04481 * t * t);
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(Errc::invalid_argument, "normal_quantile requires p in (0, 1)");
  }
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -normal_quantile(1.0 - p);

  double x = crude_upper_quantile(1.0 - p);
  for (int i = 0; i < 6; ++i) {
    const double err = normal_cdf(x) - p;
    const double step = err / normal_pdf(x);
    x -= step;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
  }
  return x;
}

}  // namespace condcov
