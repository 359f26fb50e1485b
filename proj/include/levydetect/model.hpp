#pragma once

#include <optional>
#include <string>

#include "levydetect/numerics.hpp"

namespace levydetect {

enum class Family { BrownianDrift, CompoundPoisson, JumpDiffusion, GammaSubordinator };

enum class JumpLaw { Gaussian, Exponential, TwoSidedExponential };

std::string to_string(Family family);
std::string to_string(JumpLaw law);

/// Normalized jump-size density of a compound-Poisson block.
struct JumpDensity {
  JumpLaw law = JumpLaw::Gaussian;
  // Gaussian
  double mean = 0.0;
  double sd = 1.0;
  // Exponential (positive jumps)
  double rate = 1.0;
  // Two-sided exponential: rate_up on x > 0 with probability weight_up
  double rate_up = 1.0;
  double rate_down = 1.0;
  double weight_up = 0.5;

  static JumpDensity gaussian(double mean, double sd);
  static JumpDensity exponential(double rate);
  static JumpDensity two_sided(double rate_up, double rate_down, double weight_up);

  double pdf(double x) const;
  bool supports_negative() const { return law != JumpLaw::Exponential; }
  bool supports_positive() const { return true; }
  /// E[J 1{|J| <= 1}].
  double truncated_mean() const;
  void validate() const;
};

struct CompoundPoissonBlock {
  double intensity = 1.0;
  JumpDensity jumps;
};

struct GammaBlock {
  double activity = 1.0;  // a: nu(dx) = a x^-1 e^{-x/scale} dx
  double scale = 1.0;
};

/// One generating triplet (sigma, b, nu) drawn from a small parametric
/// catalogue. `drift_b` is the drift under the truncation 1{|x| <= 1}.
struct LevySpec {
  Family family = Family::BrownianDrift;
  double sigma = 1.0;
  double drift_b = 0.0;
  std::optional<CompoundPoissonBlock> poisson;
  std::optional<GammaBlock> gamma;

  static LevySpec brownian(double sigma, double drift);
  /// `linear_drift` is the drift net of jumps, X_t = c t + sum of jumps.
  static LevySpec compound_poisson(double intensity, JumpDensity jumps,
                                   double linear_drift = 0.0);
  static LevySpec jump_diffusion(double sigma, double linear_drift, double intensity,
                                 JumpDensity jumps);
  static LevySpec gamma_subordinator(double activity, double scale,
                                     double linear_drift = 0.0);

  /// Throws ValidationError on a malformed specification.
  void validate() const;

  bool has_jumps() const { return poisson.has_value() || gamma.has_value(); }
  /// Density of the Levy measure at x (zero outside the support).
  double levy_density(double x) const;
  /// Integral of x over |x| <= 1 against the Levy measure.
  double truncated_jump_mean() const;
  /// c = b - int_{|x|<=1} x nu(dx): deterministic slope of X net of jumps.
  double linear_drift() const { return drift_b - truncated_jump_mean(); }
};

/// phi(x) = c0 + c1 x + c2 x^2, used on one side of the origin.
struct QuadraticPiece {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double operator()(double x) const { return c0 + x * (c1 + x * c2); }
};

/// Closed form of phi = log(d nu1 / d nu0) on the common support, stored as
/// one quadratic piece per half line.
class DensityRatio {
 public:
  DensityRatio(QuadraticPiece negative, QuadraticPiece positive, bool has_negative,
               bool has_positive);

  /// Throws DomainError outside the support.
  double phi(double x) const;
  double exp_phi(double x) const;

  const QuadraticPiece& negative() const { return negative_; }
  const QuadraticPiece& positive() const { return positive_; }
  bool has_negative() const { return has_negative_; }
  bool has_positive() const { return has_positive_; }
  bool in_support(double x) const;
  bool is_affine() const;
  /// True when phi is the same constant everywhere (intensity-only change).
  bool is_constant() const;

 private:
  QuadraticPiece negative_;
  QuadraticPiece positive_;
  bool has_negative_;
  bool has_positive_;
};

/// Which of the three equivalence conditions failed.
enum class Condition { None, EqualVolatility, LevyMeasure, Drift };

std::string to_string(Condition condition);

struct Admissibility {
  bool admissible = false;
  Condition violated = Condition::None;
  std::string message;
};

/// beta_pre = -int (e^phi - 1 - phi) dnu0, beta_post = beta_pre +
/// int phi (e^phi - 1) dnu0, compensator_rate = int (e^phi - 1) dnu0.
struct DriftConstants {
  double beta_pre = 0.0;
  double beta_post = 0.0;
  double compensator_rate = 0.0;
};

class ChangeModel {
 public:
  const LevySpec& pre() const { return pre_; }
  const LevySpec& post() const { return post_; }
  const Admissibility& status() const { return status_; }
  bool admissible() const { return status_.admissible; }
  bool has_jumps() const { return pre_.has_jumps(); }

  double alpha() const { return alpha_; }
  const std::optional<DensityRatio>& phi() const { return phi_; }
  const std::optional<DriftConstants>& drift() const { return drift_; }
  /// Value of the integrability integral for condition (ii), when computed.
  const std::optional<numerics::HalfLineIntegral>& hellinger() const { return hellinger_; }

  /// Mean slope of U under the in-control law (Brownian and jump parts).
  double u_drift_pre() const;
  /// Mean slope of U under the out-of-control law.
  double u_drift_post() const;

  /// Compact textual identity of the pair, used in report provenance.
  std::string digest() const;

  /// Throws ContractError naming the violated condition if inadmissible.
  void require_admissible() const;

 private:
  friend ChangeModel build_change_model(const LevySpec& pre, const LevySpec& post);

  LevySpec pre_;
  LevySpec post_;
  double alpha_ = 0.0;
  std::optional<DensityRatio> phi_;
  std::optional<DriftConstants> drift_;
  std::optional<numerics::HalfLineIntegral> hellinger_;
  Admissibility status_;
};

/// Validates both specs (ValidationError), pairs them (UnsupportedPairError)
/// and checks equivalence. An inadmissible pair is returned with
/// admissible() == false rather than thrown.
ChangeModel build_change_model(const LevySpec& pre, const LevySpec& post);

/// log(d nu1 / d nu0)(x). Requires an admissible model with jumps.
double phi_eval(const ChangeModel& model, double x);

/// Closed-form drift constants. Requires an admissible model with jumps.
DriftConstants drift_constants(const ChangeModel& model);

/// The same constants by quadrature over the Levy measure. Throws
/// NumericalError carrying the error estimate when a tail does not settle.
DriftConstants drift_constants_by_quadrature(const ChangeModel& model);

/// int (e^{phi/2} - 1)^2 nu0(dx), evaluated as int (sqrt(nu1) - sqrt(nu0))^2
/// by decade-split quadrature on each half line.
numerics::HalfLineIntegral hellinger_integral(const LevySpec& pre, const LevySpec& post);

}  // namespace levydetect
