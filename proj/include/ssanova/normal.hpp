#pragma once

namespace ssanova {

/// Standard normal CDF via the complementary error function.
double normal_cdf(double x);

/// Standard normal density.
double normal_pdf(double x);

/// Inverse CDF for p in (0, 1): rational initial approximation refined by
/// Newton steps to ~1e-15 residual in CDF space.
double normal_quantile(double p);

} // namespace ssanova
