#include "levydetect/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace levydetect::stats {

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 64;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

MeanSe mean_se(std::span<const double> values) {
  MeanSe out;
  out.n = values.size();
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = pairwise_sum(values) / n;
  if (values.size() < 2) return out;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - out.mean;
    sq[i] = d * d;
  }
  out.variance = pairwise_sum(sq) / (n - 1.0);
  out.std_error = std::sqrt(out.variance / n);
  return out;
}

RatioEstimate ratio_of_means(std::span<const double> numerator,
                             std::span<const double> denominator) {
  RatioEstimate out;
  const std::size_t m = std::min(numerator.size(), denominator.size());
  if (m == 0) return out;
  const double n = static_cast<double>(m);
  out.mean_numerator = pairwise_sum(numerator.first(m)) / n;
  out.mean_denominator = pairwise_sum(denominator.first(m)) / n;
  out.ratio = out.mean_numerator / out.mean_denominator;
  if (m < 2) return out;
  // Linearized residuals a_i - r b_i carry the delta-method variance.
  std::vector<double> resid(m);
  for (std::size_t i = 0; i < m; ++i) {
    resid[i] = numerator[i] - out.ratio * denominator[i];
  }
  const MeanSe r = mean_se(resid);
  out.std_error = r.std_error / std::abs(out.mean_denominator);
  return out;
}

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  KsResult out;
  if (a.empty() || b.empty()) return out;
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  out.statistic = d;
  const double ne = nx * ny / (nx + ny);
  const double sq = std::sqrt(ne);
  out.p_value = kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d);
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace levydetect::stats
