#pragma once

#include <cstddef>
#include <span>

namespace chaoscale {

/// Neumaier-compensated sum in the given order.
double compensated_sum(std::span<const double> values);

/// Compensated sum over the values sorted ascending. The result depends only
/// on the multiset of values, so it is invariant under any permutation.
double symmetric_sum(std::span<const double> values);

struct SampleSummary {
  double mean = 0.0;
  double variance = 0.0;  // unbiased (n - 1) sample variance, 0 when n < 2
  double stderr_of_mean = 0.0;
  std::size_t count = 0;
};

/// Two-pass mean/variance with compensated accumulation in index order.
SampleSummary summarize(std::span<const double> values);

/// Ordinary least-squares slope of log|y| against log x. Points with
/// y == 0 are skipped; throws InvalidArgument if fewer than two remain.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace chaoscale
