#pragma once

namespace cvna {

/// Standard normal CDF.
double normal_cdf(double x);

/// CDF of N(0, variance) at x. variance must be positive.
double normal_cdf(double x, double variance);

/// Standard normal quantile; returns -inf / +inf at p == 0 / p == 1.
double normal_quantile(double p);

/// Density of N(0, variance) at x.
double normal_pdf(double x, double variance);

}  // namespace cvna
