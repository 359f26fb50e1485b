#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "levydetect/model.hpp"
#include "levydetect/rng.hpp"

namespace levydetect {

inline constexpr double kNever = std::numeric_limits<double>::infinity();

struct Jump {
  double time = 0.0;
  double size = 0.0;
};

/// One simulation step (t0, t0 + dt].
struct StepIncrement {
  double dx = 0.0;
  /// Sum of every jump in the step. For the gamma family this is the whole
  /// gamma increment, most of which is below the ledger threshold.
  double jump_sum = 0.0;
  /// Ledger jumps in the step, ordered by time. Valid until the next advance().
  std::span<const Jump> ledger;
  bool post_change = false;
};

/// Step-by-step sampler of X under the law with change at tau. Draw order is
/// fixed per step, so a given RngStream always yields the same path.
class PathSimulator {
 public:
  PathSimulator(const ChangeModel& model, double tau, double grid_dt, RngStream stream);

  StepIncrement advance();

  double grid_dt() const { return dt_; }
  std::size_t steps_taken() const { return step_; }
  double time() const { return static_cast<double>(step_) * dt_; }
  /// Index of the first post-change step (tau snapped to the grid).
  std::size_t change_step() const { return change_step_; }
  double change_point() const;
  /// Jumps below this size are not written to the ledger (gamma family only).
  double ledger_threshold() const { return ledger_threshold_; }

 private:
  const LevySpec& active() const;
  void sample_poisson_jumps(const CompoundPoissonBlock& block, double t1);
  void sample_gamma(const GammaBlock& block, double t0);

  const ChangeModel* model_;
  double dt_;
  std::size_t step_ = 0;
  std::size_t change_step_;
  Philox4x32 engine_;
  double next_jump_ = kNever;
  double ledger_threshold_ = 0.0;
  double jump_total_ = 0.0;
  std::vector<Jump> scratch_;
};

struct SamplePath {
  double grid_dt = 0.0;
  double horizon = 0.0;
  /// Snapped change-point; kNever for the in-control law.
  double change_point = kNever;
  /// X at grid points, values[0] = 0.
  std::vector<double> values;
  /// Simulated step increments; values is their running sum.
  std::vector<double> increments;
  std::vector<Jump> jumps;
  /// Ledger jumps of step i are jumps[offsets[i] .. offsets[i+1]).
  std::vector<std::size_t> step_jump_offsets;
  double ledger_threshold = 0.0;
  Family pre_family = Family::BrownianDrift;
  Family post_family = Family::BrownianDrift;
  RngStream source;

  std::size_t steps() const { return increments.size(); }
  std::span<const Jump> jumps_in_step(std::size_t i) const;
};

/// Number of grid steps covering [0, horizon].
std::size_t grid_steps(double horizon, double grid_dt);

SamplePath sample_changed_path(const ChangeModel& model, double tau, double horizon,
                               double grid_dt, RngStream rng);

struct IncrementSeries {
  double delta = 0.0;
  std::vector<double> increments;
};

/// Delta-increments X_{i delta} - X_{(i-1) delta}. Throws AlignmentError when
/// delta is not an integer multiple of the simulation step.
IncrementSeries restrict_to_grid(const SamplePath& path, double delta);

/// Integer ratio delta / grid_dt, or AlignmentError.
std::size_t grid_stride(double delta, double grid_dt);

/// CSV dumps: "t,x" and "t,jump_size".
void write_path_csv(std::ostream& os, const SamplePath& path);
void write_ledger_csv(std::ostream& os, const SamplePath& path);

}  // namespace levydetect
