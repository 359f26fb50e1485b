#include "levydetect/paths.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "levydetect/errors.hpp"

namespace levydetect {

namespace {

constexpr double kMaxLedgerRate = 1e3;

double uniform(Philox4x32& eng) {
  // (0, 1): 53-bit mantissa from two words, never exactly zero.
  const std::uint64_t hi = eng() >> 5;
  const std::uint64_t lo = eng() >> 6;
  return (static_cast<double>(hi * 67108864ull + lo) + 0.5) / 9007199254740992.0;
}

double exponential(Philox4x32& eng, double rate) { return -std::log(uniform(eng)) / rate; }

double e1(double z) { return -std::expint(-z); }

// Smallest jump size recorded in the gamma ledger: jumps above eps arrive at
// rate a E1(eps / theta), kept at or below kMaxLedgerRate.
double gamma_threshold(const GammaBlock& g) {
  double z = 1e-12;
  if (g.activity * e1(z) > kMaxLedgerRate) {
    double lo = std::log(1e-12), hi = std::log(50.0);
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (g.activity * e1(std::exp(mid)) > kMaxLedgerRate) lo = mid; else hi = mid;
    }
    z = std::exp(hi);
  }
  return z * g.scale;
}

double jump_size(Philox4x32& eng, const JumpDensity& f) {
  switch (f.law) {
    case JumpLaw::Gaussian: {
      boost::random::normal_distribution<double> n(f.mean, f.sd);
      return n(eng);
    }
    case JumpLaw::Exponential:
      return exponential(eng, f.rate);
    case JumpLaw::TwoSidedExponential:
      if (uniform(eng) < f.weight_up) return exponential(eng, f.rate_up);
      return -exponential(eng, f.rate_down);
  }
  return 0.0;
}

}  // namespace

std::size_t grid_steps(double horizon, double grid_dt) {
  return static_cast<std::size_t>(std::floor(horizon / grid_dt * (1.0 + 1e-12)));
}

std::size_t grid_stride(double delta, double grid_dt) {
  if (!(delta > 0.0) || !(grid_dt > 0.0)) {
    throw ValidationError("grid steps must be positive");
  }
  const double ratio = delta / grid_dt;
  const double k = std::round(ratio);
  if (k < 1.0 || std::abs(ratio - k) > 1e-9 * std::max(1.0, k)) {
    throw AlignmentError("delta is not an integer multiple of the simulation step");
  }
  return static_cast<std::size_t>(k);
}

PathSimulator::PathSimulator(const ChangeModel& model, double tau, double grid_dt,
                             RngStream stream)
    : model_(&model), dt_(grid_dt), engine_(stream.engine()) {
  model.require_admissible();
  if (!(grid_dt > 0.0) || !std::isfinite(grid_dt)) {
    throw ValidationError("grid_dt must be positive");
  }
  if (std::isnan(tau) || tau < 0.0) throw ValidationError("tau must lie in [0, inf]");
  change_step_ = std::isinf(tau) ? std::numeric_limits<std::size_t>::max()
                                 : static_cast<std::size_t>(std::llround(tau / grid_dt));
  if (model.pre().gamma) {
    ledger_threshold_ =
        std::max(gamma_threshold(*model.pre().gamma), gamma_threshold(*model.post().gamma));
  }
  const LevySpec& first = change_step_ == 0 ? model.post() : model.pre();
  if (first.poisson) next_jump_ = exponential(engine_, first.poisson->intensity);
}

double PathSimulator::change_point() const {
  if (change_step_ == std::numeric_limits<std::size_t>::max()) return kNever;
  return static_cast<double>(change_step_) * dt_;
}

const LevySpec& PathSimulator::active() const {
  return step_ >= change_step_ ? model_->post() : model_->pre();
}

void PathSimulator::sample_poisson_jumps(const CompoundPoissonBlock& block, double t1) {
  while (next_jump_ <= t1) {
    scratch_.push_back(Jump{next_jump_, jump_size(engine_, block.jumps)});
    next_jump_ += exponential(engine_, block.intensity);
  }
}

void PathSimulator::sample_gamma(const GammaBlock& block, double t0) {
  const double shape = block.activity * dt_;
  boost::random::gamma_distribution<double> g(shape, block.scale);
  const double total = g(engine_);
  // Size-biased stick-breaking of the gamma increment: successive jumps are
  // remaining * (1 - U^{1/shape}); once the remainder is below the threshold
  // no unseen jump can exceed it.
  double remaining = total;
  const std::size_t first = scratch_.size();
  while (remaining > ledger_threshold_) {
    const double keep = std::pow(uniform(engine_), 1.0 / shape);
    const double jump = remaining * (1.0 - keep);
    remaining *= keep;
    if (jump > ledger_threshold_) scratch_.push_back(Jump{0.0, jump});
  }
  for (std::size_t i = first; i < scratch_.size(); ++i) {
    scratch_[i].time = t0 + dt_ * uniform(engine_);
  }
  std::sort(scratch_.begin() + static_cast<std::ptrdiff_t>(first), scratch_.end(),
            [](const Jump& a, const Jump& b) { return a.time < b.time; });
  jump_total_ = total;
}

StepIncrement PathSimulator::advance() {
  const double t0 = static_cast<double>(step_) * dt_;
  const double t1 = static_cast<double>(step_ + 1) * dt_;
  if (step_ == change_step_ && step_ != 0 && model_->post().poisson) {
    // Memoryless clock restarted with the post-change intensity at tau.
    next_jump_ = t0 + exponential(engine_, model_->post().poisson->intensity);
  }
  const LevySpec& law = active();
  scratch_.clear();
  jump_total_ = 0.0;

  double continuous = law.linear_drift() * dt_;
  if (law.sigma > 0.0) {
    boost::random::normal_distribution<double> n(0.0, 1.0);
    continuous += law.sigma * std::sqrt(dt_) * n(engine_);
  }
  if (law.poisson) {
    sample_poisson_jumps(*law.poisson, t1);
    for (const Jump& j : scratch_) jump_total_ += j.size;
  } else if (law.gamma) {
    sample_gamma(*law.gamma, t0);
  }

  StepIncrement out;
  out.post_change = step_ >= change_step_;
  out.jump_sum = jump_total_;
  out.dx = continuous + jump_total_;
  out.ledger = scratch_;
  ++step_;
  return out;
}

std::span<const Jump> SamplePath::jumps_in_step(std::size_t i) const {
  return std::span<const Jump>(jumps).subspan(step_jump_offsets[i],
                                              step_jump_offsets[i + 1] - step_jump_offsets[i]);
}

SamplePath sample_changed_path(const ChangeModel& model, double tau, double horizon,
                               double grid_dt, RngStream rng) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ValidationError("horizon must be positive and finite");
  }
  if (!(grid_dt > 0.0)) throw ValidationError("grid_dt must be positive");
  if (grid_dt > horizon) throw ValidationError("grid_dt exceeds the horizon");
  PathSimulator sim(model, tau, grid_dt, rng);
  const std::size_t n = grid_steps(horizon, grid_dt);

  SamplePath path;
  path.grid_dt = grid_dt;
  path.horizon = horizon;
  path.change_point = sim.change_point();
  path.ledger_threshold = sim.ledger_threshold();
  path.pre_family = model.pre().family;
  path.post_family = model.post().family;
  path.source = rng;
  path.values.reserve(n + 1);
  path.increments.reserve(n);
  path.step_jump_offsets.reserve(n + 1);
  path.values.push_back(0.0);
  path.step_jump_offsets.push_back(0);
  double x = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const StepIncrement inc = sim.advance();
    x += inc.dx;
    path.values.push_back(x);
    path.increments.push_back(inc.dx);
    path.jumps.insert(path.jumps.end(), inc.ledger.begin(), inc.ledger.end());
    path.step_jump_offsets.push_back(path.jumps.size());
  }
  return path;
}

IncrementSeries restrict_to_grid(const SamplePath& path, double delta) {
  const std::size_t k = grid_stride(delta, path.grid_dt);
  IncrementSeries out;
  out.delta = delta;
  const std::size_t n = path.steps() / k;
  out.increments.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    out.increments.push_back(path.values[i * k] - path.values[(i - 1) * k]);
  }
  return out;
}

void write_path_csv(std::ostream& os, const SamplePath& path) {
  os.precision(17);
  os << "t,x\n";
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    os << static_cast<double>(i) * path.grid_dt << ',' << path.values[i] << '\n';
  }
}

void write_ledger_csv(std::ostream& os, const SamplePath& path) {
  os.precision(17);
  os << "t,jump_size\n";
  for (const Jump& j : path.jumps) os << j.time << ',' << j.size << '\n';
}

}  // namespace levydetect
