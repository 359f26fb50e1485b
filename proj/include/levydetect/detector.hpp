#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "levydetect/likelihood.hpp"
#include "levydetect/paths.hpp"

namespace levydetect {

enum class RuleKind { CusumContinuous, CusumGrid, CusumIid, ShiryaevRoberts, FixedTime };

std::string to_string(RuleKind rule);

/// Stopping rule and its barrier. `log_barrier` is log h for the CUSUM
/// rules and the log of the threshold for Shiryaev-Roberts. Grid rules
/// monitor every `delta` time units.
struct DetectorConfig {
  RuleKind rule = RuleKind::CusumGrid;
  double log_barrier = 0.0;
  double delta = 0.0;
  std::size_t fixed_steps = 0;
  /// Stop on stat > barrier instead of stat >= barrier.
  bool strict = false;

  static DetectorConfig cusum_continuous(double log_barrier);
  static DetectorConfig cusum_grid(double delta, double log_barrier);
  static DetectorConfig cusum_iid(double log_barrier);
  static DetectorConfig shiryaev_roberts(double delta, double log_threshold);
  static DetectorConfig fixed_time(double delta, std::size_t steps);

  bool is_cusum() const {
    return rule == RuleKind::CusumContinuous || rule == RuleKind::CusumGrid ||
           rule == RuleKind::CusumIid;
  }
  /// Monitoring step on a simulation grid of width grid_dt.
  double monitor_step(double grid_dt) const {
    return rule == RuleKind::CusumContinuous ? grid_dt : delta;
  }
  std::string name() const;
  void validate() const;
};

/// Running log CUSUM statistic; -inf encodes S = 0 before the first step.
struct CusumState {
  double log_stat = -std::numeric_limits<double>::infinity();
  std::size_t steps = 0;
};

/// log S' = max(log S, 0) + log_l.
CusumState cusum_update(CusumState state, double log_l);

struct StopResult {
  double stop_time = 0.0;
  bool censored = false;
  double stat_at_stop = 0.0;
  std::size_t steps_taken = 0;
};

/// Y_t = U_t - min_{s <= t} U_s on the grid.
std::vector<double> drawup(std::span<const double> u);
std::vector<double> drawup(const LLRPath& llr);

/// First monitored grid point (every `monitor_stride`-th) with y >= barrier.
StopResult first_passage(std::span<const double> y, double log_barrier, double grid_dt,
                         std::size_t monitor_stride);

/// Streaming evaluation of a rule fed with U at successive simulation grid
/// points. Grid rules see the U-increment over each monitoring interval.
class Monitor {
 public:
  Monitor(const DetectorConfig& config, double grid_dt);

  /// Resets to time zero. Returns true if the rule alarms before any data
  /// (continuous CUSUM with a zero barrier).
  bool start();
  /// Feeds U at the next grid point; returns true when the rule alarms there.
  bool push(double u);
  /// Puts the statistic in its least favorable state at the current point:
  /// S = 1 for CUSUM, R = 0 for Shiryaev-Roberts. No-op for fixed-time rules.
  void restart();
  bool restartable() const { return config_.rule != RuleKind::FixedTime; }

  bool stopped() const { return stopped_; }
  double stop_time() const { return stop_time_; }
  double time() const { return static_cast<double>(grid_index_) * dt_; }
  /// Log-domain statistic at the last monitored point (Y for the continuous
  /// rule, log S_k for grid CUSUM, log R_k for Shiryaev-Roberts).
  double statistic() const;
  std::size_t monitored_steps() const { return monitored_; }
  std::size_t stride() const { return stride_; }
  /// True when the last push landed on a monitoring point.
  bool on_monitor_point() const { return sub_ == 0; }
  const DetectorConfig& config() const { return config_; }

  StopResult result() const;

 private:
  bool crosses(double stat) const {
    return config_.strict ? stat > config_.log_barrier : stat >= config_.log_barrier;
  }
  bool monitor(double log_l);

  DetectorConfig config_;
  double dt_;
  std::size_t stride_;
  std::size_t sub_ = 0;
  std::size_t grid_index_ = 0;
  std::size_t monitored_ = 0;
  double u_now_ = 0.0;
  double u_last_ = 0.0;
  CusumState cusum_;
  double log_r_ = -std::numeric_limits<double>::infinity();
  bool stopped_ = false;
  double stop_time_ = 0.0;
};

/// Runs a path-based rule over an LLR path; censored at the path horizon.
StopResult run_rule(const DetectorConfig& config, const LLRPath& llr);

/// Discrete i.i.d. CUSUM over Delta-increments with known increment laws.
StopResult run_rule(const DetectorConfig& config, const IncrementSeries& series,
                    const IncrementLaw& q0, const IncrementLaw& q1);

/// Log statistic at every monitoring point from time zero up to the stop
/// (inclusive). For grid CUSUM the first entry is -inf (S_0 = 0).
std::vector<double> statistic_trace(const DetectorConfig& config, const LLRPath& llr);

/// Last monitoring time at or before the stop where the log statistic is
/// <= 0 (S <= 1). Throws UndefinedEstimateError for a censored run.
double mle_changepoint(std::span<const double> log_stats, const StopResult& stop,
                       double monitor_dt);

/// Moves a barrier off the lattice {k log(lambda1/lambda0)} of an
/// intensity-only compound-Poisson change by 1e-6 when it sits on it.
double avoid_lattice(double log_barrier, const ChangeModel& model);

}  // namespace levydetect
