#include "chaoscale/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "chaoscale/errors.hpp"

namespace chaoscale {

double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

double symmetric_sum(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return compensated_sum(sorted);
}

SampleSummary summarize(std::span<const double> values) {
  SampleSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = compensated_sum(values) / static_cast<double>(values.size());
  if (values.size() < 2) return s;
  std::vector<double> sq(values.size());
  std::transform(values.begin(), values.end(), sq.begin(), [&](double v) {
    const double d = v - s.mean;
    return d * d;
  });
  s.variance = compensated_sum(sq) / static_cast<double>(values.size() - 1);
  s.stderr_of_mean = std::sqrt(s.variance / static_cast<double>(values.size()));
  return s;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("loglog_slope: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] == 0.0) continue;
    if (!(x[i] > 0.0)) throw InvalidArgument("loglog_slope: x must be positive");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(std::abs(y[i])));
  }
  if (lx.size() < 2) throw InvalidArgument("loglog_slope: need two nonzero points");
  const double n = static_cast<double>(lx.size());
  const double mx = compensated_sum(lx) / n;
  const double my = compensated_sum(ly) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw InvalidArgument("loglog_slope: x values are identical");
  return sxy / sxx;
}

}  // namespace chaoscale
