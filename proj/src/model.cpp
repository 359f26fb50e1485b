#include "levydetect/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "levydetect/errors.hpp"
#include "levydetect/stats.hpp"

namespace levydetect {

std::string to_string(Family family) {
  switch (family) {
    case Family::BrownianDrift: return "brownian";
    case Family::CompoundPoisson: return "compound_poisson";
    case Family::JumpDiffusion: return "jump_diffusion";
    case Family::GammaSubordinator: return "gamma";
  }
  return "unknown";
}

std::string to_string(JumpLaw law) {
  switch (law) {
    case JumpLaw::Gaussian: return "gaussian";
    case JumpLaw::Exponential: return "exponential";
    case JumpLaw::TwoSidedExponential: return "two_sided_exponential";
  }
  return "unknown";
}

std::string to_string(Condition condition) {
  switch (condition) {
    case Condition::None: return "none";
    case Condition::EqualVolatility: return "condition (i): equal Brownian volatilities";
    case Condition::LevyMeasure:
      return "condition (ii): equivalent Levy measures with int (e^{phi/2}-1)^2 nu0(dx) < inf";
    case Condition::Drift: return "condition (iii): drift identity";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Jump densities

JumpDensity JumpDensity::gaussian(double mean, double sd) {
  JumpDensity d;
  d.law = JumpLaw::Gaussian;
  d.mean = mean;
  d.sd = sd;
  return d;
}

JumpDensity JumpDensity::exponential(double rate) {
  JumpDensity d;
  d.law = JumpLaw::Exponential;
  d.rate = rate;
  return d;
}

JumpDensity JumpDensity::two_sided(double rate_up, double rate_down, double weight_up) {
  JumpDensity d;
  d.law = JumpLaw::TwoSidedExponential;
  d.rate_up = rate_up;
  d.rate_down = rate_down;
  d.weight_up = weight_up;
  return d;
}

double JumpDensity::pdf(double x) const {
  switch (law) {
    case JumpLaw::Gaussian: {
      const double z = (x - mean) / sd;
      return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
    }
    case JumpLaw::Exponential:
      return x > 0.0 ? rate * std::exp(-rate * x) : 0.0;
    case JumpLaw::TwoSidedExponential:
      if (x > 0.0) return weight_up * rate_up * std::exp(-rate_up * x);
      if (x < 0.0) return (1.0 - weight_up) * rate_down * std::exp(rate_down * x);
      return 0.0;
  }
  return 0.0;
}

namespace {

// int_0^1 x r e^{-r x} dx
double exp_truncated_mean(double r) { return (1.0 - std::exp(-r) * (1.0 + r)) / r; }

double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

double JumpDensity::truncated_mean() const {
  switch (law) {
    case JumpLaw::Gaussian: {
      const double a = (-1.0 - mean) / sd;
      const double b = (1.0 - mean) / sd;
      return mean * (stats::normal_cdf(b) - stats::normal_cdf(a)) +
             sd * (std_normal_pdf(a) - std_normal_pdf(b));
    }
    case JumpLaw::Exponential:
      return exp_truncated_mean(rate);
    case JumpLaw::TwoSidedExponential:
      return weight_up * exp_truncated_mean(rate_up) -
             (1.0 - weight_up) * exp_truncated_mean(rate_down);
  }
  return 0.0;
}

void JumpDensity::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  switch (law) {
    case JumpLaw::Gaussian:
      if (!std::isfinite(mean)) throw ValidationError("gaussian jump mean must be finite");
      if (!positive(sd)) throw ValidationError("gaussian jump sd must be positive");
      break;
    case JumpLaw::Exponential:
      if (!positive(rate)) throw ValidationError("exponential jump rate must be positive");
      break;
    case JumpLaw::TwoSidedExponential:
      if (!positive(rate_up) || !positive(rate_down)) {
        throw ValidationError("two-sided exponential rates must be positive");
      }
      if (!(weight_up > 0.0 && weight_up < 1.0)) {
        throw ValidationError("two-sided exponential weight must lie in (0, 1)");
      }
      break;
  }
}

// ---------------------------------------------------------------------------
// LevySpec

LevySpec LevySpec::brownian(double sigma, double drift) {
  LevySpec s;
  s.family = Family::BrownianDrift;
  s.sigma = sigma;
  s.drift_b = drift;
  return s;
}

LevySpec LevySpec::compound_poisson(double intensity, JumpDensity jumps,
                                    double linear_drift) {
  LevySpec s;
  s.family = Family::CompoundPoisson;
  s.sigma = 0.0;
  s.poisson = CompoundPoissonBlock{intensity, jumps};
  s.drift_b = linear_drift + s.truncated_jump_mean();
  return s;
}

LevySpec LevySpec::jump_diffusion(double sigma, double linear_drift, double intensity,
                                  JumpDensity jumps) {
  LevySpec s;
  s.family = Family::JumpDiffusion;
  s.sigma = sigma;
  s.poisson = CompoundPoissonBlock{intensity, jumps};
  s.drift_b = linear_drift + s.truncated_jump_mean();
  return s;
}

LevySpec LevySpec::gamma_subordinator(double activity, double scale, double linear_drift) {
  LevySpec s;
  s.family = Family::GammaSubordinator;
  s.sigma = 0.0;
  s.gamma = GammaBlock{activity, scale};
  s.drift_b = linear_drift + s.truncated_jump_mean();
  return s;
}

void LevySpec::validate() const {
  if (!std::isfinite(sigma) || sigma < 0.0) {
    throw ValidationError("sigma must be a finite nonnegative number");
  }
  if (!std::isfinite(drift_b)) throw ValidationError("drift must be finite");
  auto check_poisson = [&] {
    if (!poisson) throw ValidationError(to_string(family) + " requires a compound-Poisson block");
    if (!std::isfinite(poisson->intensity) || poisson->intensity <= 0.0) {
      throw ValidationError("compound-Poisson intensity must be positive");
    }
    poisson->jumps.validate();
  };
  switch (family) {
    case Family::BrownianDrift:
      if (poisson || gamma) throw ValidationError("brownian spec carries no jump block");
      if (sigma <= 0.0) throw ValidationError("brownian spec needs sigma > 0");
      break;
    case Family::CompoundPoisson:
      if (gamma) throw ValidationError("compound-Poisson spec carries no gamma block");
      if (sigma != 0.0) throw ValidationError("compound-Poisson spec has sigma = 0");
      check_poisson();
      break;
    case Family::JumpDiffusion:
      if (gamma) throw ValidationError("jump-diffusion spec carries no gamma block");
      if (sigma <= 0.0) throw ValidationError("jump-diffusion spec needs sigma > 0");
      check_poisson();
      break;
    case Family::GammaSubordinator:
      if (poisson) throw ValidationError("gamma spec carries no compound-Poisson block");
      if (!gamma) throw ValidationError("gamma spec requires activity and scale");
      if (sigma != 0.0) throw ValidationError("gamma subordinator is pure jump (sigma = 0)");
      if (!std::isfinite(gamma->activity) || gamma->activity <= 0.0) {
        throw ValidationError("gamma activity must be positive");
      }
      if (!std::isfinite(gamma->scale) || gamma->scale <= 0.0) {
        throw ValidationError("gamma scale must be positive");
      }
      break;
  }
}

double LevySpec::levy_density(double x) const {
  if (poisson) return poisson->intensity * poisson->jumps.pdf(x);
  if (gamma) {
    return x > 0.0 ? gamma->activity / x * std::exp(-x / gamma->scale) : 0.0;
  }
  return 0.0;
}

double LevySpec::truncated_jump_mean() const {
  if (poisson) return poisson->intensity * poisson->jumps.truncated_mean();
  if (gamma) return gamma->activity * gamma->scale * (1.0 - std::exp(-1.0 / gamma->scale));
  return 0.0;
}

// ---------------------------------------------------------------------------
// DensityRatio

DensityRatio::DensityRatio(QuadraticPiece negative, QuadraticPiece positive,
                           bool has_negative, bool has_positive)
    : negative_(negative),
      positive_(positive),
      has_negative_(has_negative),
      has_positive_(has_positive) {}

bool DensityRatio::in_support(double x) const {
  if (x > 0.0) return has_positive_;
  if (x < 0.0) return has_negative_;
  return has_positive_ && has_negative_;
}

double DensityRatio::phi(double x) const {
  if (!std::isfinite(x) || !in_support(x)) {
    throw DomainError("phi evaluated outside the common support of the Levy measures");
  }
  return x >= 0.0 && has_positive_ ? positive_(x) : negative_(x);
}

double DensityRatio::exp_phi(double x) const { return std::exp(phi(x)); }

bool DensityRatio::is_affine() const {
  return (!has_negative_ || negative_.c2 == 0.0) && (!has_positive_ || positive_.c2 == 0.0);
}

bool DensityRatio::is_constant() const {
  auto flat = [](const QuadraticPiece& p) { return p.c1 == 0.0 && p.c2 == 0.0; };
  if (has_negative_ && !flat(negative_)) return false;
  if (has_positive_ && !flat(positive_)) return false;
  if (has_negative_ && has_positive_) return negative_.c0 == positive_.c0;
  return true;
}

// ---------------------------------------------------------------------------
// Pairing and admissibility

namespace {

bool pairable(Family a, Family b) {
  if (a == b) return true;
  auto brownian_jd = [](Family x, Family y) {
    return x == Family::BrownianDrift && y == Family::JumpDiffusion;
  };
  return brownian_jd(a, b) || brownian_jd(b, a);
}

bool same_support(const JumpDensity& a, const JumpDensity& b) {
  return a.supports_negative() == b.supports_negative() &&
         a.supports_positive() == b.supports_positive();
}

DensityRatio poisson_ratio(const CompoundPoissonBlock& p0, const CompoundPoissonBlock& p1) {
  const double log_intensity = std::log(p1.intensity / p0.intensity);
  const JumpDensity& f0 = p0.jumps;
  const JumpDensity& f1 = p1.jumps;
  switch (f0.law) {
    case JumpLaw::Gaussian: {
      const double v0 = f0.sd * f0.sd;
      const double v1 = f1.sd * f1.sd;
      QuadraticPiece q;
      q.c2 = 0.5 / v0 - 0.5 / v1;
      q.c1 = f1.mean / v1 - f0.mean / v0;
      q.c0 = log_intensity + std::log(f0.sd / f1.sd) - 0.5 * f1.mean * f1.mean / v1 +
             0.5 * f0.mean * f0.mean / v0;
      return DensityRatio(q, q, true, true);
    }
    case JumpLaw::Exponential: {
      QuadraticPiece q{log_intensity + std::log(f1.rate / f0.rate), -(f1.rate - f0.rate), 0.0};
      return DensityRatio(QuadraticPiece{}, q, false, true);
    }
    case JumpLaw::TwoSidedExponential: {
      QuadraticPiece up{log_intensity + std::log(f1.weight_up * f1.rate_up /
                                                 (f0.weight_up * f0.rate_up)),
                        -(f1.rate_up - f0.rate_up), 0.0};
      QuadraticPiece down{log_intensity + std::log((1.0 - f1.weight_up) * f1.rate_down /
                                                   ((1.0 - f0.weight_up) * f0.rate_down)),
                          f1.rate_down - f0.rate_down, 0.0};
      return DensityRatio(down, up, true, true);
    }
  }
  throw UnsupportedPairError("unknown jump law");
}

DensityRatio gamma_ratio(const GammaBlock& g0, const GammaBlock& g1) {
  QuadraticPiece q{std::log(g1.activity / g0.activity), 1.0 / g0.scale - 1.0 / g1.scale, 0.0};
  return DensityRatio(QuadraticPiece{}, q, false, true);
}

// E_f[phi(J)] for a normalized jump density f and piecewise-quadratic phi.
double expected_phi(const JumpDensity& f, const DensityRatio& r) {
  switch (f.law) {
    case JumpLaw::Gaussian: {
      const QuadraticPiece& q = r.positive();
      return q.c0 + q.c1 * f.mean + q.c2 * (f.mean * f.mean + f.sd * f.sd);
    }
    case JumpLaw::Exponential: {
      const QuadraticPiece& q = r.positive();
      return q.c0 + q.c1 / f.rate + 2.0 * q.c2 / (f.rate * f.rate);
    }
    case JumpLaw::TwoSidedExponential: {
      const QuadraticPiece& u = r.positive();
      const QuadraticPiece& d = r.negative();
      const double up = u.c0 + u.c1 / f.rate_up + 2.0 * u.c2 / (f.rate_up * f.rate_up);
      const double down =
          d.c0 - d.c1 / f.rate_down + 2.0 * d.c2 / (f.rate_down * f.rate_down);
      return f.weight_up * up + (1.0 - f.weight_up) * down;
    }
  }
  return 0.0;
}

// Centres and shoulders of Gaussian jump laws, as seen from one side.
numerics::HalfLineOptions features(const LevySpec& a, const LevySpec& b, bool negative) {
  numerics::HalfLineOptions opt;
  for (const LevySpec* s : {&a, &b}) {
    if (!s->poisson || s->poisson->jumps.law != JumpLaw::Gaussian) continue;
    const JumpDensity& j = s->poisson->jumps;
    for (int k = -8; k <= 8; ++k) {
      const double x = (negative ? -1.0 : 1.0) * (j.mean + k * j.sd);
      if (x > 0.0) opt.breakpoints.push_back(x);
    }
  }
  return opt;
}

}  // namespace

numerics::HalfLineIntegral hellinger_integral(const LevySpec& pre, const LevySpec& post) {
  auto integrand = [&](double x) {
    const double d = std::sqrt(post.levy_density(x)) - std::sqrt(pre.levy_density(x));
    return d * d;
  };
  const numerics::HalfLineIntegral pos =
      numerics::integrate_half_line(integrand, features(pre, post, false));
  if (!pos.finite) return pos;
  const numerics::HalfLineIntegral neg = numerics::integrate_half_line(
      [&](double x) { return integrand(-x); }, features(pre, post, true));
  numerics::HalfLineIntegral out = neg;
  out.value += pos.value;
  out.error += pos.error;
  out.decades_used += pos.decades_used;
  out.exceeded_threshold = pos.exceeded_threshold || neg.exceeded_threshold;
  return out;
}

ChangeModel build_change_model(const LevySpec& pre, const LevySpec& post) {
  pre.validate();
  post.validate();
  if (!pairable(pre.family, post.family)) {
    throw UnsupportedPairError("cannot pair " + to_string(pre.family) + " with " +
                               to_string(post.family));
  }

  ChangeModel m;
  m.pre_ = pre;
  m.post_ = post;
  auto reject = [&](Condition c, const std::string& detail) {
    m.status_ = Admissibility{false, c, to_string(c) + " violated: " + detail};
    return m;
  };

  if (pre.sigma != post.sigma) {
    std::ostringstream os;
    os << "sigma_pre = " << pre.sigma << " differs from sigma_post = " << post.sigma;
    return reject(Condition::EqualVolatility, os.str());
  }

  // Condition (ii): equivalence first, then the integrability integral.
  if (pre.has_jumps() != post.has_jumps()) {
    return reject(Condition::LevyMeasure,
                  "one Levy measure is zero and the other is not, so they are not equivalent");
  }
  if (pre.poisson && post.poisson) {
    const JumpDensity& f0 = pre.poisson->jumps;
    const JumpDensity& f1 = post.poisson->jumps;
    if (f0.law != f1.law) {
      if (!same_support(f0, f1)) {
        return reject(Condition::LevyMeasure,
                      "jump laws " + to_string(f0.law) + " and " + to_string(f1.law) +
                          " have different supports");
      }
      throw UnsupportedPairError("no closed-form density ratio between " + to_string(f0.law) +
                                 " and " + to_string(f1.law) + " jumps");
    }
    m.phi_ = poisson_ratio(*pre.poisson, *post.poisson);
  } else if (pre.gamma && post.gamma) {
    m.phi_ = gamma_ratio(*pre.gamma, *post.gamma);
  }
  if (pre.has_jumps()) {
    m.hellinger_ = hellinger_integral(pre, post);
    if (!m.hellinger_->finite) {
      std::ostringstream os;
      os << "integrability condition int (e^{phi/2}-1)^2 nu0(dx) < inf fails; partial integral "
         << m.hellinger_->value << " over " << m.hellinger_->decades_used
         << " decades did not settle";
      m.phi_.reset();
      return reject(Condition::LevyMeasure, os.str());
    }
  }

  // Condition (iii).
  const double gap =
      post.drift_b - pre.drift_b - (post.truncated_jump_mean() - pre.truncated_jump_mean());
  if (pre.sigma > 0.0) {
    m.alpha_ = gap / (pre.sigma * pre.sigma);
  } else {
    const double scale = std::max({1.0, std::abs(pre.drift_b), std::abs(post.drift_b)});
    if (std::abs(gap) > 1e-10 * scale) {
      std::ostringstream os;
      os << "sigma = 0 forces alpha = 0 but b1 - b0 - int_{|x|<=1} x (nu1 - nu0)(dx) = " << gap;
      return reject(Condition::Drift, os.str());
    }
    m.alpha_ = 0.0;
  }

  m.status_ = Admissibility{true, Condition::None, "admissible"};
  if (pre.has_jumps()) m.drift_ = drift_constants(m);
  return m;
}

void ChangeModel::require_admissible() const {
  if (!status_.admissible) throw ContractError("inadmissible model: " + status_.message);
}

double ChangeModel::u_drift_pre() const {
  const double jump = drift_ ? drift_->beta_pre : 0.0;
  return jump - 0.5 * alpha_ * alpha_ * pre_.sigma * pre_.sigma;
}

double ChangeModel::u_drift_post() const {
  const double jump = drift_ ? drift_->beta_post : 0.0;
  return jump + 0.5 * alpha_ * alpha_ * pre_.sigma * pre_.sigma;
}

namespace {

std::string describe(const LevySpec& s) {
  std::ostringstream os;
  os.precision(17);
  os << to_string(s.family) << "(sigma=" << s.sigma << ",b=" << s.drift_b;
  if (s.poisson) {
    const JumpDensity& j = s.poisson->jumps;
    os << ",lambda=" << s.poisson->intensity << "," << to_string(j.law);
    switch (j.law) {
      case JumpLaw::Gaussian: os << "(" << j.mean << "," << j.sd << ")"; break;
      case JumpLaw::Exponential: os << "(" << j.rate << ")"; break;
      case JumpLaw::TwoSidedExponential:
        os << "(" << j.rate_up << "," << j.rate_down << "," << j.weight_up << ")";
        break;
    }
  }
  if (s.gamma) os << ",a=" << s.gamma->activity << ",theta=" << s.gamma->scale;
  os << ")";
  return os.str();
}

}  // namespace

std::string ChangeModel::digest() const { return describe(pre_) + "->" + describe(post_); }

// ---------------------------------------------------------------------------
// phi and drift constants

namespace {

void require_jumps(const ChangeModel& model) {
  model.require_admissible();
  if (!model.has_jumps() || !model.phi()) {
    throw ContractError("model has no jump component");
  }
}

}  // namespace

double phi_eval(const ChangeModel& model, double x) {
  require_jumps(model);
  return model.phi()->phi(x);
}

DriftConstants drift_constants(const ChangeModel& model) {
  if (!model.phi()) throw ContractError("model has no jump component");
  const DensityRatio& r = *model.phi();
  DriftConstants out;
  if (model.pre().poisson) {
    const auto& p0 = *model.pre().poisson;
    const auto& p1 = *model.post().poisson;
    out.compensator_rate = p1.intensity - p0.intensity;
    out.beta_pre = -out.compensator_rate + p0.intensity * expected_phi(p0.jumps, r);
    out.beta_post = p1.intensity * expected_phi(p1.jumps, r) - out.compensator_rate;
  } else {
    // Gamma with equal activity: phi(x) = c x with c = 1/theta0 - 1/theta1.
    const GammaBlock& g0 = *model.pre().gamma;
    const double c = r.positive().c1;
    const double a = g0.activity;
    const double shrink = 1.0 - c * g0.scale;  // theta0 / theta1
    out.compensator_rate = -a * std::log(shrink);
    const double int_phi = c * a * g0.scale;
    const double int_phi_exp = c * a * g0.scale / shrink;
    out.beta_pre = -out.compensator_rate + int_phi;
    out.beta_post = int_phi_exp - out.compensator_rate;
  }
  return out;
}

DriftConstants drift_constants_by_quadrature(const ChangeModel& model) {
  require_jumps(model);
  const LevySpec& pre = model.pre();
  const DensityRatio& r = *model.phi();
  auto integrate_both = [&](auto&& g, const char* what) {
    auto guarded = [&](double x) {
      const double d0 = pre.levy_density(x);
      if (d0 == 0.0 || !r.in_support(x)) return 0.0;
      return g(r.phi(x)) * d0;
    };
    numerics::HalfLineIntegral pos =
        numerics::integrate_half_line(guarded, features(pre, model.post(), false));
    double value = pos.value;
    double err = pos.error;
    bool ok = pos.finite;
    if (r.has_negative()) {
      numerics::HalfLineIntegral neg =
          numerics::integrate_half_line([&](double x) { return guarded(-x); },
                                        features(pre, model.post(), true));
      value += neg.value;
      err += neg.error;
      ok = ok && neg.finite;
    }
    if (!ok || !std::isfinite(value)) {
      throw NumericalError(std::string("quadrature for ") + what + " did not converge", err);
    }
    return value;
  };
  DriftConstants out;
  out.compensator_rate = integrate_both([](double p) { return std::expm1(p); }, "compensator");
  const double convex =
      integrate_both([](double p) { return std::expm1(p) - p; }, "beta_pre integrand");
  const double tilt =
      integrate_both([](double p) { return p * std::expm1(p); }, "beta_post integrand");
  out.beta_pre = -convex;
  out.beta_post = out.beta_pre + tilt;
  return out;
}

}  // namespace levydetect
