#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "levydetect/detector.hpp"
#include "levydetect/model.hpp"
#include "levydetect/report.hpp"

namespace levydetect {

struct SimulationSettings {
  double grid_dt = 1e-3;
  /// Censoring horizon. For delay measurements it counts from the change.
  double horizon = 100.0;
  std::size_t n_rep = 10000;
  std::uint64_t master_seed = 1;
  unsigned threads = 1;
};

enum class Regime { InControl, OutOfControl };

std::string to_string(Regime regime);

/// Stream arms; replications of different experiments never share streams.
namespace arms {
inline constexpr std::uint64_t kMartingale = 1;
inline constexpr std::uint64_t kInControl = 2;
inline constexpr std::uint64_t kOutOfControl = 3;
inline constexpr std::uint64_t kLowerBound = 4;
inline constexpr std::uint64_t kSimulate = 5;
inline constexpr std::uint64_t kLorden = 16;  // + index into the tau grid
}  // namespace arms

/// Stop times of one replication batch, one row per monitor.
struct RunLengths {
  std::vector<std::vector<double>> stop_times;
  std::vector<std::vector<unsigned char>> censored;
  double horizon = 0.0;
};

/// Simulates n_rep paths under the given regime and runs every monitor on
/// each path (common random numbers across monitors).
RunLengths simulate_run_lengths(const ChangeModel& model, std::span<const DetectorConfig> configs,
                                Regime regime, const SimulationSettings& settings,
                                std::uint64_t arm);

/// Mean stop time with flags for censoring.
EvalReport summarize(std::span<const double> values, std::span<const unsigned char> censored,
                     const ChangeModel& model, const DetectorConfig& config,
                     const SimulationSettings& settings, const std::string& label);

EvalReport estimate_arl(const ChangeModel& model, const DetectorConfig& config, Regime regime,
                        const SimulationSettings& settings);

/// Several rules on the same simulated paths.
std::vector<EvalReport> estimate_arl(const ChangeModel& model,
                                     std::span<const DetectorConfig> configs, Regime regime,
                                     const SimulationSettings& settings);

/// Stride-k grid CUSUM ARLs on a common fine grid and their extrapolation to
/// zero step under E(d) = A + B sqrt(d), fitted by least squares per path.
struct Extrapolation {
  std::vector<double> steps;
  std::vector<EvalReport> levels;
  EvalReport extrapolated;
};

Extrapolation extrapolated_arl(const ChangeModel& model, double log_barrier, Regime regime,
                               const SimulationSettings& settings,
                               std::vector<std::size_t> strides = {1, 2, 4});

struct Calibration {
  double log_barrier = 0.0;
  EvalReport report;  // final probe at 4x budget
  std::size_t probes = 0;
  double rel_error = 0.0;
  bool converged = false;
};

/// Bisection of the barrier so that E_inf(T) matches gamma within rel_tol.
/// The censoring horizon is 20 gamma; settings.horizon is ignored.
Calibration calibrate_barrier(const ChangeModel& model, const DetectorConfig& rule, double gamma,
                              double rel_tol, const SimulationSettings& settings);

struct LordenResult {
  std::vector<double> tau_grid;
  std::vector<EvalReport> per_tau;
  /// Delay samples per tau, in replication order.
  std::vector<std::vector<double>> delays;
  std::size_t worst_index = 0;
  const EvalReport& worst() const { return per_tau.at(worst_index); }
};

/// Delay after a change at each tau. Restartable rules are restarted from
/// their least favorable state at tau; the fixed-time rule runs from 0 and
/// contributes (T - tau)^+.
LordenResult lorden_delay(const ChangeModel& model, const DetectorConfig& config,
                          std::span<const double> tau_grid, const SimulationSettings& settings);

struct LowerBound {
  EvalReport report;
  double mean_numerator = 0.0;
  double mean_denominator = 0.0;
};

/// Delta E[sum max(S_k, 1)] / E[sum (1 - S_k)^+] over k < T/Delta under the
/// in-control law, S_k the grid CUSUM statistic with S_0 = 0.
LowerBound lower_bound_ratio(const ChangeModel& model, const DetectorConfig& config,
                             const SimulationSettings& settings);

struct ConvergenceLevel {
  double delta = 0.0;
  EvalReport stop;
  EvalReport gap;  // mean of T(delta) - T(stride 1)
};

struct ConvergenceStudy {
  std::vector<ConvergenceLevel> levels;  // coarse to fine
  EvalReport reference;
  std::size_t n_rep = 0;
  std::size_t n_monotone = 0;
  /// Paths where stopping on > and on >= differ at stride 1.
  std::size_t convention_disagreements = 0;
  bool gaps_decreasing = false;
  bool all_monotone() const { return n_monotone == n_rep; }
};

/// Grid CUSUMs on delta0 / 2^n, n < levels, and the stride-1 rule on the
/// same paths.
ConvergenceStudy convergence_study(const ChangeModel& model, double log_barrier,
                                   std::size_t levels, double delta0, Regime regime,
                                   const SimulationSettings& settings);

struct ComparisonRow {
  DetectorConfig config;
  std::optional<Calibration> calibration;
  std::optional<LordenResult> lorden;
  std::vector<std::string> flags;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  /// Set when at least one CUSUM row and one other row were evaluated.
  std::optional<bool> cusum_dominates;
};

/// Calibrates every rule to gamma, then measures worst-case delays over
/// tau_grid. Rules that fail to calibrate are kept with a flag.
Comparison compare(const ChangeModel& model, double gamma, std::span<const DetectorConfig> rules,
                   double rel_tol, std::span<const double> tau_grid,
                   const SimulationSettings& settings);

}  // namespace levydetect
