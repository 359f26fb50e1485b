#include "levydetect/numerics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

namespace levydetect::numerics {

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double rel_tol) {
  QuadResult out;
  if (a == b) return out;
  double err = 0.0;
  out.value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, a, b, 10, rel_tol, &err);
  out.error = err;
  return out;
}

namespace {

// Integral over [a, b], a > 0, in the variable s = log x.
QuadResult integrate_log(const std::function<double(double)>& f, double a, double b,
                         double rel_tol) {
  return integrate(
      [&](double s) {
        const double x = std::exp(s);
        return f(x) * x;
      },
      std::log(a), std::log(b), rel_tol);
}

// Walks decades outward from 1 in one direction. Returns false if the side
// did not settle within max_decades.
bool integrate_side(const std::function<double(double)>& f, bool toward_zero,
                    const HalfLineOptions& opt, double& total, double& error,
                    int& decades) {
  double sum = 0.0;
  int quiet = 0;
  for (int k = 0; k < opt.max_decades; ++k) {
    double lo, hi;
    if (toward_zero) {
      hi = std::pow(10.0, -k);
      lo = std::pow(10.0, -(k + 1));
    } else {
      lo = std::pow(10.0, k);
      hi = std::pow(10.0, k + 1);
    }
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo == 0.0) break;
    QuadResult piece;
    double a = lo;
    for (double b : opt.breakpoints) {
      if (b <= a || b >= hi) continue;
      const QuadResult part = integrate_log(f, a, b, opt.rel_tol);
      piece.value += part.value;
      piece.error += part.error;
      a = b;
    }
    const QuadResult last = integrate_log(f, a, hi, opt.rel_tol);
    piece.value += last.value;
    piece.error += last.error;
    ++decades;
    sum += piece.value;
    error += piece.error;
    if (!std::isfinite(sum) || std::abs(total + sum) > opt.divergence_threshold) {
      total += sum;
      return false;
    }
    const double scale = std::abs(total + sum);
    // An all-zero prefix may only settle after 20 decades.
    const bool may_settle = scale > 0.0 || k >= 20;
    if (may_settle && (piece.value == 0.0 || std::abs(piece.value) <= 1e-15 * scale)) {
      if (++quiet >= opt.settle_decades) {
        total += sum;
        return true;
      }
    } else {
      quiet = 0;
    }
  }
  total += sum;
  return false;
}

}  // namespace

HalfLineIntegral integrate_half_line(const std::function<double(double)>& f,
                                     const HalfLineOptions& given) {
  HalfLineOptions options = given;
  std::sort(options.breakpoints.begin(), options.breakpoints.end());
  HalfLineIntegral out;
  double total = 0.0;
  double error = 0.0;
  int decades = 0;
  const bool upper_ok = integrate_side(f, false, options, total, error, decades);
  bool lower_ok = upper_ok;
  if (upper_ok) lower_ok = integrate_side(f, true, options, total, error, decades);
  out.value = total;
  out.error = error;
  out.decades_used = decades;
  out.finite = upper_ok && lower_ok;
  out.exceeded_threshold = !std::isfinite(total) ||
                           std::abs(total) > options.divergence_threshold;
  return out;
}

}  // namespace levydetect::numerics
