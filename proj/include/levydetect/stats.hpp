#pragma once

#include <cstddef>
#include <span>

namespace levydetect::stats {

/// Pairwise (cascade) summation; result does not depend on how the
/// replications were scheduled, only on their index order.
double pairwise_sum(std::span<const double> values);

struct MeanSe {
  double mean = 0.0;
  double std_error = 0.0;
  double variance = 0.0;
  std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> values);

/// Ratio of means mean(a)/mean(b) with a first-order delta-method standard
/// error computed from the paired samples.
struct RatioEstimate {
  double ratio = 0.0;
  double std_error = 0.0;
  double mean_numerator = 0.0;
  double mean_denominator = 0.0;
};

RatioEstimate ratio_of_means(std::span<const double> numerator,
                             std::span<const double> denominator);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test using the asymptotic Kolmogorov
/// distribution with the Stephens small-sample correction.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Survival function of the Kolmogorov distribution, P(K > x).
double kolmogorov_survival(double x);

double normal_cdf(double x);

}  // namespace levydetect::stats
