#include <doctest.h>

#include <cmath>
#include <vector>

#include "levydetect/errors.hpp"
#include "levydetect/eval.hpp"

using namespace levydetect;

namespace {

double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

ChangeModel brownian_shift() {
  return build_change_model(LevySpec::brownian(1.0, 0.0), LevySpec::brownian(1.0, 1.0));
}

SimulationSettings settings(double dt, double horizon, std::size_t n, std::uint64_t seed) {
  SimulationSettings s;
  s.grid_dt = dt;
  s.horizon = horizon;
  s.n_rep = n;
  s.master_seed = seed;
  return s;
}

bool within(const EvalReport& r, double expected, double k = 4.0) {
  return std::abs(r.estimate - expected) <= k * r.std_error;
}

}  // namespace

TEST_CASE("zero barrier on a grid gives a geometric run length") {
  // log l ~ N(-delta/2, delta) in control, N(delta/2, delta) after the change.
  const ChangeModel m = brownian_shift();
  const double delta = 0.1;
  const auto rule = DetectorConfig::cusum_grid(delta, 0.0);
  const auto s = settings(delta, 50.0, 20000, 3);
  const EvalReport in = estimate_arl(m, rule, Regime::InControl, s);
  const EvalReport out = estimate_arl(m, rule, Regime::OutOfControl, s);
  CHECK(within(in, delta / Phi(-std::sqrt(delta) / 2.0)));
  CHECK(within(out, delta / Phi(std::sqrt(delta) / 2.0)));
  CHECK(in.n_censored == 0);
}

TEST_CASE("extrapolated ARL matches the Brownian closed forms") {
  const ChangeModel m = brownian_shift();
  const double h = 1.0;
  const auto s = settings(0.01, 60.0, 4000, 11);
  const Extrapolation in = extrapolated_arl(m, h, Regime::InControl, s);
  const Extrapolation out = extrapolated_arl(m, h, Regime::OutOfControl, s);
  CHECK(within(in.extrapolated, 2.0 * (std::exp(h) - h - 1.0)));
  CHECK(within(out.extrapolated, 2.0 * (std::exp(-h) + h - 1.0)));
  REQUIRE(in.levels.size() == 3);
  // Coarser strides overshoot more on common paths.
  CHECK(in.levels[0].estimate <= in.levels[1].estimate);
  CHECK(in.levels[1].estimate <= in.levels[2].estimate);
}

TEST_CASE("in-control ARL is nondecreasing in the barrier under common paths") {
  const ChangeModel m = brownian_shift();
  const auto s = settings(0.05, 200.0, 500, 5);
  double last = 0.0;
  for (double h = 0.0; h <= 2.5; h += 0.5) {
    const double e = estimate_arl(m, DetectorConfig::cusum_grid(0.1, h), Regime::InControl, s).estimate;
    CHECK(e >= last);
    last = e;
  }
}

TEST_CASE("results do not depend on the thread count") {
  const ChangeModel m = build_change_model(
      LevySpec::compound_poisson(1.0, JumpDensity::exponential(1.0)),
      LevySpec::compound_poisson(2.0, JumpDensity::exponential(1.0)));
  auto s = settings(0.01, 30.0, 300, 42);
  const auto rule = DetectorConfig::cusum_grid(0.1, 1.5);
  s.threads = 1;
  const EvalReport a = estimate_arl(m, rule, Regime::InControl, s);
  s.threads = 3;
  const EvalReport b = estimate_arl(m, rule, Regime::InControl, s);
  CHECK(a.estimate == b.estimate);
  CHECK(a.std_error == b.std_error);
  CHECK(a.provenance.model_digest == b.provenance.model_digest);
}

TEST_CASE("censoring is flagged") {
  const ChangeModel m = brownian_shift();
  const EvalReport r =
      estimate_arl(m, DetectorConfig::cusum_grid(0.1, 4.0), Regime::InControl, settings(0.1, 2.0, 200, 1));
  CHECK(r.n_censored > 0);
  CHECK(r.has_flag("censored"));
  CHECK(r.has_flag("downward_bias"));
  CHECK(r.has_flag("insufficient_horizon"));
}

TEST_CASE("lattice barriers are perturbed and flagged") {
  const ChangeModel m = build_change_model(
      LevySpec::compound_poisson(1.0, JumpDensity::exponential(1.0)),
      LevySpec::compound_poisson(2.0, JumpDensity::exponential(1.0)));
  const EvalReport r = estimate_arl(m, DetectorConfig::cusum_grid(0.1, std::log(2.0)),
                                    Regime::OutOfControl, settings(0.1, 20.0, 50, 1));
  CHECK(r.has_flag("barrier_perturbed"));
}

TEST_CASE("calibration reaches the target") {
  const ChangeModel m = brownian_shift();
  const double gamma = 10.0, tol = 0.05;
  const Calibration c =
      calibrate_barrier(m, DetectorConfig::cusum_grid(0.1, 0.0), gamma, tol, settings(0.1, 0, 2000, 8));
  CHECK(c.converged);
  CHECK(c.rel_error <= tol);
  // Fresh paths at the calibrated barrier.
  const EvalReport check = estimate_arl(m, DetectorConfig::cusum_grid(0.1, c.log_barrier),
                                        Regime::InControl, settings(0.1, 400.0, 8000, 99));
  CHECK(std::abs(check.estimate - gamma) <= tol * gamma + 4.0 * check.std_error);
}

TEST_CASE("calibration of the fixed-time rule") {
  const Calibration c = calibrate_barrier(brownian_shift(), DetectorConfig::fixed_time(0.1, 1), 1.05,
                                          0.02, settings(0.1, 0, 100, 1));
  CHECK(c.report.estimate == doctest::Approx(1.1));
}

TEST_CASE("targets below one monitoring step are infeasible") {
  CHECK_THROWS_AS(calibrate_barrier(brownian_shift(), DetectorConfig::cusum_grid(0.1, 0.0), 0.05, 0.02,
                                    settings(0.1, 0, 100, 1)),
                  InfeasibleTargetError);
}

TEST_CASE("Lorden delay at tau = 0 is the out-of-control ARL") {
  const ChangeModel m = brownian_shift();
  const auto rule = DetectorConfig::cusum_grid(0.1, 1.5);
  const auto s = settings(0.1, 50.0, 4000, 4);
  const std::vector<double> taus{0.0, 1.0, 2.5};
  const LordenResult l = lorden_delay(m, rule, taus, s);
  const EvalReport arl = estimate_arl(m, rule, Regime::OutOfControl, s);
  const EvalReport& d0 = l.per_tau[0];
  CHECK(std::abs(d0.estimate - arl.estimate) <= 4.0 * std::hypot(d0.std_error, arl.std_error));
  // Restarted at S = 1 the delay law does not depend on tau.
  for (const EvalReport& r : l.per_tau) {
    CHECK(std::abs(r.estimate - d0.estimate) <= 4.0 * std::hypot(r.std_error, d0.std_error));
  }
  CHECK(l.worst().estimate >= d0.estimate);
}

TEST_CASE("Lorden delay of the fixed-time rule") {
  // T = 0.5 always; delay is (0.5 - tau)^+.
  const LordenResult l = lorden_delay(brownian_shift(), DetectorConfig::fixed_time(0.1, 5),
                                      std::vector<double>{0.0, 0.2, 0.7}, settings(0.1, 5.0, 20, 1));
  CHECK(l.per_tau[0].estimate == doctest::Approx(0.5));
  CHECK(l.per_tau[1].estimate == doctest::Approx(0.3));
  CHECK(l.per_tau[2].estimate == doctest::Approx(0.0));
  CHECK(l.worst_index == 0);
}

TEST_CASE("change points off the grid are rejected") {
  CHECK_THROWS_AS(lorden_delay(brownian_shift(), DetectorConfig::cusum_grid(0.1, 1.0),
                               std::vector<double>{0.05}, settings(0.1, 5.0, 10, 1)),
                  AlignmentError);
}

TEST_CASE("lower bound for rules that stop after one or two steps") {
  const ChangeModel m = brownian_shift();
  const double delta = 0.1;
  const auto s = settings(delta, 10.0, 20000, 6);
  // Only S_0 = 0 contributes: ratio is delta exactly.
  const LowerBound one = lower_bound_ratio(m, DetectorConfig::fixed_time(delta, 1), s);
  CHECK(one.report.estimate == delta);
  // Two steps: lognormal S_1 with log-variance delta.
  const double p = Phi(std::sqrt(delta) / 2.0);
  const double expected = delta * (1.0 + 2.0 * p) / (2.0 * p);
  const LowerBound two = lower_bound_ratio(m, DetectorConfig::fixed_time(delta, 2), s);
  CHECK(within(two.report, expected));
  CHECK(two.mean_numerator == doctest::Approx(1.0 + 2.0 * p).epsilon(0.02));
  CHECK(two.mean_denominator == doctest::Approx(2.0 * p).epsilon(0.02));
}

TEST_CASE("lower bound contract") {
  CHECK_THROWS_AS(lower_bound_ratio(brownian_shift(), DetectorConfig::cusum_continuous(1.0),
                                    settings(0.1, 10.0, 10, 1)),
                  ContractError);
}

TEST_CASE("convergence study on nested grids") {
  const ChangeModel m = brownian_shift();
  const ConvergenceStudy c =
      convergence_study(m, 1.0, 3, 0.04, Regime::InControl, settings(0.01, 60.0, 400, 2));
  CHECK(c.all_monotone());
  REQUIRE(c.levels.size() == 3);
  for (std::size_t i = 1; i < c.levels.size(); ++i) {
    CHECK(c.levels[i].stop.estimate <= c.levels[i - 1].stop.estimate);
    CHECK(c.levels[i].gap.estimate >= 0.0);
  }
  CHECK(c.levels.back().stop.estimate >= c.reference.estimate);
  CHECK_THROWS_AS(convergence_study(m, 1.0, 3, 0.03, Regime::InControl, settings(0.01, 10.0, 10, 2)),
                  AlignmentError);
}

TEST_CASE("comparison") {
  const ChangeModel m = brownian_shift();
  const auto s = settings(0.1, 50.0, 300, 12);
  const std::vector<double> taus{0.0};

  const std::vector<DetectorConfig> one{DetectorConfig::cusum_grid(0.1, 0.0)};
  const Comparison single = compare(m, 5.0, one, 0.1, taus, s);
  CHECK_FALSE(single.cusum_dominates.has_value());
  REQUIRE(single.rows.size() == 1);
  CHECK(single.rows[0].lorden.has_value());

  // An infeasible target is kept as a flagged row.
  const Comparison bad = compare(m, 0.05, one, 0.1, taus, s);
  REQUIRE(bad.rows.size() == 1);
  CHECK_FALSE(bad.rows[0].lorden.has_value());
  REQUIRE_FALSE(bad.rows[0].flags.empty());
  CHECK(bad.rows[0].flags[0].rfind("calibration_failed", 0) == 0);
}

TEST_CASE("settings are validated") {
  const ChangeModel m = brownian_shift();
  const auto rule = DetectorConfig::cusum_grid(0.1, 1.0);
  CHECK_THROWS_AS(estimate_arl(m, rule, Regime::InControl, settings(0.0, 1.0, 10, 1)), ValidationError);
  CHECK_THROWS_AS(estimate_arl(m, rule, Regime::InControl, settings(0.1, 1.0, 1, 1)), ValidationError);
  CHECK_THROWS_AS(estimate_arl(m, DetectorConfig::cusum_grid(0.15, 1.0), Regime::InControl,
                               settings(0.1, 1.0, 10, 1)),
                  AlignmentError);
}
