#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "levydetect/model.hpp"
#include "levydetect/paths.hpp"
#include "levydetect/report.hpp"

namespace levydetect {

/// Log-likelihood ratio process U on the simulation grid of its source path.
struct LLRPath {
  double grid_dt = 0.0;
  double horizon = 0.0;
  std::vector<double> u_values;  // u_values[0] = 0
  RngStream source;

  std::size_t steps() const { return u_values.empty() ? 0 : u_values.size() - 1; }
};

/// Maps one observed step (increment plus ledger jumps) to the increment of U.
///
/// Continuous part: alpha (x^c - c0 dt) - alpha^2 sigma^2 dt / 2, where x^c is
/// the step increment minus its ledger jumps and c0 the pre-change slope net
/// of jumps. Jump part: sum of phi over ledger jumps minus the compensator
/// rate times dt; for the gamma family phi is linear with no intercept, so
/// the sum over all jumps is c1 (dx - c0 dt) and sub-threshold jumps are
/// accounted for exactly.
class LlrStep {
 public:
  explicit LlrStep(const ChangeModel& model);

  double operator()(double dx, std::span<const Jump> ledger, double dt) const {
    return continuous_part(dx, ledger, dt) + jump_part(dx, ledger, dt);
  }
  double continuous_part(double dx, std::span<const Jump> ledger, double dt) const;
  double jump_part(double dx, std::span<const Jump> ledger, double dt) const;

 private:
  const ChangeModel* model_;
  double alpha_;
  double sigma2_;
  double slope_pre_;
  double compensator_ = 0.0;
  double gamma_slope_ = 0.0;
  bool jumps_ = false;
  bool gamma_ = false;
};

enum class LlrComponent { Full, Continuous, Jump };

/// Throws ContractError if the path was simulated from a different family
/// pair or the model is inadmissible.
LLRPath llr_path(const ChangeModel& model, const SamplePath& path,
                 LlrComponent component = LlrComponent::Full);

/// Parametric law of one Delta-increment for the discrete-time engine.
struct IncrementLaw {
  enum class Kind { Gaussian, Poisson };
  Kind kind = Kind::Gaussian;
  double mean = 0.0;
  double sd = 1.0;
  double rate = 1.0;

  static IncrementLaw gaussian(double mean, double sd) {
    return IncrementLaw{Kind::Gaussian, mean, sd, 0.0};
  }
  static IncrementLaw poisson(double rate) { return IncrementLaw{Kind::Poisson, 0.0, 0.0, rate}; }
};

/// log(dQ1/dQ0)(x) for equal-variance Gaussians or Poisson counts.
double llr_increment_iid(const IncrementLaw& q0, const IncrementLaw& q1, double x);

/// Delta-increment laws of X for a model without jumps.
std::pair<IncrementLaw, IncrementLaw> brownian_increment_laws(const ChangeModel& model,
                                                             double delta);

struct MartingaleCheck {
  EvalReport report;  // estimate of E_inf[exp(U_delta)]
  double z_score = 0.0;
  bool passed = false;
};

/// Monte Carlo check that exp(U) has unit mean under the in-control law.
MartingaleCheck martingale_check(const ChangeModel& model, double delta, std::size_t n_rep,
                                 std::uint64_t master_seed, double grid_dt = 0.0,
                                 unsigned threads = 1);

}  // namespace levydetect
