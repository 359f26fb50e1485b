#pragma once

#include <functional>
#include <vector>

namespace levydetect::numerics {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive Gauss-Kronrod on a finite interval.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double rel_tol = 1e-13);

/// Outcome of integrating a nonnegative-or-signed density over a half line
/// split into decades around the truncation point 1.
struct HalfLineIntegral {
  double value = 0.0;
  double error = 0.0;
  bool finite = true;
  /// Set when the integral was declared divergent: either the partial sum
  /// exceeded `divergence_threshold` or the decade contributions never
  /// became negligible.
  bool exceeded_threshold = false;
  int decades_used = 0;
};

struct HalfLineOptions {
  double divergence_threshold = 1e6;
  double rel_tol = 1e-13;
  int max_decades = 300;
  /// Number of consecutive negligible decades required to declare a tail
  /// converged.
  int settle_decades = 3;
  /// Points where f has features narrower than a decade (e.g. the centre of
  /// a narrow jump law); decades containing them are split there.
  std::vector<double> breakpoints;
};

/// Integrates f over (0, inf). The interval is cut into [10^-(k+1), 10^-k]
/// below 1 and [10^k, 10^(k+1)] above; each side must settle on its own.
HalfLineIntegral integrate_half_line(const std::function<double(double)>& f,
                                     const HalfLineOptions& options = {});

}  // namespace levydetect::numerics
