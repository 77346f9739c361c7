#pragma once

#include <cmath>
#include <string>

namespace condcov {

enum class KernelFamily { gaussian, epanechnikov };

const char* to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double bandwidth = 1.0;
};

void validate_kernel(const KernelSpec& spec);

/// Unnormalized kernel weight K_h(u). The estimators are ratios of weighted
/// sums, so any positive scaling of the kernel cancels.
inline double kernel_weight(const KernelSpec& spec, double u) {
  const double t = u / spec.bandwidth;
  if (spec.family == KernelFamily::gaussian) return std::exp(-0.5 * t * t);
  return t * t >= 1.0 ? 0.0 : 1.0 - t * t;
}

}  // namespace condcov
