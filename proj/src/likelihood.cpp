#include "levydetect/likelihood.hpp"

#include <cmath>

#include "levydetect/errors.hpp"
#include "levydetect/parallel.hpp"
#include "levydetect/stats.hpp"

namespace levydetect {

LlrStep::LlrStep(const ChangeModel& model)
    : model_(&model),
      alpha_(model.alpha()),
      sigma2_(model.pre().sigma * model.pre().sigma),
      slope_pre_(model.pre().linear_drift()) {
  model.require_admissible();
  if (model.has_jumps()) {
    jumps_ = true;
    compensator_ = model.drift()->compensator_rate;
    if (model.pre().gamma) {
      gamma_ = true;
      gamma_slope_ = model.phi()->positive().c1;
    }
  }
}

double LlrStep::continuous_part(double dx, std::span<const Jump> ledger, double dt) const {
  if (alpha_ == 0.0) return 0.0;
  double xc = dx;
  for (const Jump& j : ledger) xc -= j.size;
  return alpha_ * (xc - slope_pre_ * dt) - 0.5 * alpha_ * alpha_ * sigma2_ * dt;
}

double LlrStep::jump_part(double dx, std::span<const Jump> ledger, double dt) const {
  if (!jumps_) return 0.0;
  if (gamma_) return gamma_slope_ * (dx - slope_pre_ * dt) - compensator_ * dt;
  const DensityRatio& r = *model_->phi();
  double s = 0.0;
  for (const Jump& j : ledger) s += r.phi(j.size);
  return s - compensator_ * dt;
}

LLRPath llr_path(const ChangeModel& model, const SamplePath& path, LlrComponent component) {
  model.require_admissible();
  if (path.pre_family != model.pre().family || path.post_family != model.post().family) {
    throw ContractError("path was simulated from a different family pair than the model");
  }
  const LlrStep step(model);
  LLRPath out;
  out.grid_dt = path.grid_dt;
  out.horizon = path.horizon;
  out.source = path.source;
  out.u_values.reserve(path.steps() + 1);
  out.u_values.push_back(0.0);
  double u = 0.0;
  for (std::size_t i = 0; i < path.steps(); ++i) {
    const double dx = path.increments[i];
    const auto ledger = path.jumps_in_step(i);
    switch (component) {
      case LlrComponent::Full: u += step(dx, ledger, path.grid_dt); break;
      case LlrComponent::Continuous: u += step.continuous_part(dx, ledger, path.grid_dt); break;
      case LlrComponent::Jump: u += step.jump_part(dx, ledger, path.grid_dt); break;
    }
    out.u_values.push_back(u);
  }
  return out;
}

double llr_increment_iid(const IncrementLaw& q0, const IncrementLaw& q1, double x) {
  if (q0.kind != q1.kind) throw ValidationError("increment laws are not equivalent");
  if (q0.kind == IncrementLaw::Kind::Gaussian) {
    if (!(q0.sd > 0.0) || q0.sd != q1.sd) {
      throw ValidationError("gaussian increment laws need a common positive sd");
    }
    return (q1.mean - q0.mean) * (x - 0.5 * (q0.mean + q1.mean)) / (q0.sd * q0.sd);
  }
  if (!(q0.rate > 0.0) || !(q1.rate > 0.0)) {
    throw ValidationError("poisson increment laws need positive rates");
  }
  if (x < 0.0 || x != std::floor(x)) throw DomainError("poisson count must be a nonnegative integer");
  return x * std::log(q1.rate / q0.rate) - (q1.rate - q0.rate);
}

std::pair<IncrementLaw, IncrementLaw> brownian_increment_laws(const ChangeModel& model,
                                                             double delta) {
  model.require_admissible();
  if (model.has_jumps()) throw ContractError("increment laws need a model without jumps");
  const double sd = model.pre().sigma * std::sqrt(delta);
  return {IncrementLaw::gaussian(model.pre().drift_b * delta, sd),
          IncrementLaw::gaussian(model.post().drift_b * delta, sd)};
}

MartingaleCheck martingale_check(const ChangeModel& model, double delta, std::size_t n_rep,
                                 std::uint64_t master_seed, double grid_dt, unsigned threads) {
  model.require_admissible();
  if (!(delta > 0.0)) throw ValidationError("delta must be positive");
  if (n_rep == 0) throw ValidationError("n_rep must be positive");
  if (grid_dt <= 0.0) grid_dt = delta;
  const std::size_t steps = grid_stride(delta, grid_dt);
  const LlrStep step(model);
  std::vector<double> weights(n_rep);
  parallel_for(n_rep, threads, [&](std::size_t rep) {
    PathSimulator sim(model, kNever, grid_dt, RngStream{master_seed, stream_id_for(1, rep)});
    double u = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
      const StepIncrement inc = sim.advance();
      u += step(inc.dx, inc.ledger, grid_dt);
    }
    weights[rep] = std::exp(u);
  });
  const stats::MeanSe m = stats::mean_se(weights);
  MartingaleCheck out;
  out.report.label = "martingale";
  out.report.estimate = m.mean;
  out.report.std_error = m.std_error;
  out.report.n_rep = n_rep;
  out.report.horizon = delta;
  out.report.provenance = Provenance{master_seed, grid_dt, delta, "none", model.digest()};
  out.z_score = m.std_error > 0.0 ? (m.mean - 1.0) / m.std_error : 0.0;
  out.passed = std::abs(m.mean - 1.0) <= 3.0 * m.std_error;
  out.report.flags.push_back(out.passed ? "pass" : "fail");
  return out;
}

}  // namespace levydetect
