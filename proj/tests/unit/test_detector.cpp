#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "levydetect/detector.hpp"
#include "levydetect/errors.hpp"

using namespace levydetect;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

LLRPath make_llr(std::vector<double> u, double dt) {
  LLRPath p;
  p.grid_dt = dt;
  p.horizon = dt * static_cast<double>(u.size() - 1);
  p.u_values = std::move(u);
  return p;
}

LLRPath ramp(double slope, double dt, std::size_t steps) {
  std::vector<double> u(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) u[i] = slope * static_cast<double>(i) * dt;
  return make_llr(std::move(u), dt);
}

// Gaussian random walk with drift, as a stand-in for U on a grid.
LLRPath random_walk(std::mt19937_64& gen, double drift, double dt, std::size_t steps) {
  std::normal_distribution<double> n(drift * dt, std::sqrt(dt));
  std::vector<double> u{0.0};
  for (std::size_t i = 0; i < steps; ++i) u.push_back(u.back() + n(gen));
  return make_llr(std::move(u), dt);
}

// sup over 0 <= m < k of prod_{j=m+1..k} L_j, by exhaustive search.
double exhaustive_sup(const std::vector<double>& log_l, std::size_t k) {
  double best = kNegInf;
  for (std::size_t m = 0; m < k; ++m) {
    double s = 0.0;
    for (std::size_t j = m; j < k; ++j) s += log_l[j];
    best = std::max(best, s);
  }
  return best;
}

}  // namespace

TEST_CASE("one CUSUM update") {
  CusumState s{std::log(2.0), 3};
  s = cusum_update(s, std::log(3.0));
  CHECK(std::exp(s.log_stat) == doctest::Approx(6.0));
  CHECK(s.steps == 4);
  CusumState z;
  z = cusum_update(z, -0.5);
  CHECK(z.log_stat == doctest::Approx(-0.5));
}

TEST_CASE("recursion equals the exhaustive supremum") {
  std::mt19937_64 gen(101);
  std::uniform_int_distribution<int> len(1, 50);
  std::normal_distribution<double> step(0.0, 1.0);
  std::uniform_real_distribution<double> drift(-1.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(gen);
    const double mu = drift(gen);
    std::vector<double> log_l(n);
    for (double& x : log_l) x = mu + step(gen);
    CusumState s;
    for (int k = 1; k <= n; ++k) {
      s = cusum_update(s, log_l[k - 1]);
      const double ref = exhaustive_sup(log_l, k);
      REQUIRE(std::exp(s.log_stat) ==
              doctest::Approx(std::exp(ref)).epsilon(1e-12));
    }
  }
}

TEST_CASE("grid CUSUM is the drawup of U on the grid") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    const LLRPath u = random_walk(gen, -0.5, 0.01, 400);
    for (std::size_t stride : {1u, 3u, 10u}) {
      const double delta = 0.01 * stride;
      Monitor m(DetectorConfig::cusum_grid(delta, 1e9), u.grid_dt);
      double lowest = u.u_values[0];
      for (std::size_t i = 1; i < u.u_values.size(); ++i) {
        m.push(u.u_values[i]);
        if (i % stride != 0) continue;
        const double y = u.u_values[i] - lowest;
        CHECK(m.statistic() == doctest::Approx(y).epsilon(1e-12).scale(1.0));
        lowest = std::min(lowest, u.u_values[i]);
      }
    }
    // Stride 1 with the running minimum including the current point.
    const std::vector<double> y = drawup(u);
    double low = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      low = std::min(low, u.u_values[i]);
      CHECK(y[i] == doctest::Approx(u.u_values[i] - low).epsilon(1e-15).scale(1.0));
    }
  }
}

TEST_CASE("ramp examples") {
  // Slope 1, Delta = 0.5, barrier 2 -> stop at 2.0.
  const LLRPath r = ramp(1.0, 0.5, 20);
  const StopResult s = run_rule(DetectorConfig::cusum_grid(0.5, 2.0), r);
  CHECK_FALSE(s.censored);
  CHECK(s.stop_time == 2.0);

  // First passage of U_t = t over 2 at stride 1, within one step.
  const LLRPath fine = ramp(1.0, 0.01, 500);
  const StopResult f = first_passage(drawup(fine), 2.0, 0.01, 1);
  CHECK(std::abs(f.stop_time - 2.0) <= 0.01 + 1e-12);
  const StopResult c = run_rule(DetectorConfig::cusum_continuous(2.0), fine);
  CHECK(std::abs(c.stop_time - 2.0) <= 0.01 + 1e-12);

  // All logs >= 0: S >= 1 from the first step on.
  Monitor m(DetectorConfig::cusum_grid(0.5, 1e9), 0.5);
  for (std::size_t i = 1; i < r.u_values.size(); ++i) {
    m.push(r.u_values[i]);
    CHECK(m.statistic() >= 0.0);
  }
}

TEST_CASE("zero barrier") {
  // log_l = 0 everywhere: S_1 = 1 >= h = 1, so the grid rule stops at step one.
  const LLRPath flat = make_llr(std::vector<double>(11, 0.0), 0.1);
  const StopResult g = run_rule(DetectorConfig::cusum_grid(0.1, 0.0), flat);
  CHECK(g.stop_time == doctest::Approx(0.1));
  CHECK(g.steps_taken == 1);
  // The stride-1 drawup starts at zero, so the continuous rule stops at once.
  const StopResult c = run_rule(DetectorConfig::cusum_continuous(0.0), flat);
  CHECK(c.stop_time == 0.0);
  CHECK_FALSE(c.censored);
}

TEST_CASE("dyadic ramp: levels whose grid contains the barrier stop exactly there") {
  const double dt = 1.0 / 64.0;
  const LLRPath r = ramp(1.0, dt, 64 * 4);
  for (double delta : {0.5, 0.25, 0.125, 0.0625, dt}) {
    CHECK(run_rule(DetectorConfig::cusum_grid(delta, 2.0), r).stop_time == 2.0);
  }
  CHECK(run_rule(DetectorConfig::cusum_grid(0.75, 2.0), r).stop_time == 2.25);
}

TEST_CASE("barrier conventions differ only on exact hits") {
  const double dt = 0.25;
  const LLRPath r = ramp(1.0, dt, 40);
  DetectorConfig strict = DetectorConfig::cusum_grid(dt, 2.0);
  strict.strict = true;
  CHECK(run_rule(DetectorConfig::cusum_grid(dt, 2.0), r).stop_time == 2.0);
  CHECK(run_rule(strict, r).stop_time == 2.25);
}

TEST_CASE("stop times are nondecreasing in the barrier") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 200; ++trial) {
    const LLRPath u = random_walk(gen, 0.0, 0.01, 2000);
    double last = 0.0;
    for (double h = 0.0; h <= 3.0; h += 0.25) {
      const double t = run_rule(DetectorConfig::cusum_grid(0.05, h), u).stop_time;
      CHECK(t >= last);
      last = t;
    }
  }
}

TEST_CASE("nested dyadic grids: monotone and settling on the stride-1 rule") {
  std::mt19937_64 gen(23);
  const double dt = 0.001;
  for (int trial = 0; trial < 200; ++trial) {
    const LLRPath u = random_walk(gen, -0.5, dt, 20000);
    const double ref = run_rule(DetectorConfig::cusum_grid(dt, 1.5), u).stop_time;
    double coarser = std::numeric_limits<double>::infinity();
    for (int n = 0; n <= 6; ++n) {
      const double delta = 0.064 / std::ldexp(1.0, n);
      const double t = run_rule(DetectorConfig::cusum_grid(delta, 1.5), u).stop_time;
      CHECK(t <= coarser);
      CHECK(t >= ref);
      coarser = t;
    }
    CHECK(coarser == ref);  // level 6 is the stride-1 grid
  }
}

TEST_CASE("censoring at the horizon") {
  const LLRPath down = ramp(-1.0, 0.1, 50);
  const StopResult s = run_rule(DetectorConfig::cusum_grid(0.1, 1.0), down);
  CHECK(s.censored);
  CHECK(s.stop_time == doctest::Approx(5.0));
  const StopResult f = first_passage(drawup(down), 1.0, 0.1, 1);
  CHECK(f.censored);
  CHECK(f.stop_time == doctest::Approx(5.0));
}

TEST_CASE("Shiryaev-Roberts recursion equals the sum of likelihood ratios") {
  std::mt19937_64 gen(31);
  const LLRPath u = random_walk(gen, -0.3, 0.1, 60);
  Monitor m(DetectorConfig::shiryaev_roberts(0.1, 1e9), 0.1);
  for (std::size_t k = 1; k < u.u_values.size(); ++k) {
    m.push(u.u_values[k]);
    double r = 0.0;
    for (std::size_t j = 0; j < k; ++j) r += std::exp(u.u_values[k] - u.u_values[j]);
    CHECK(std::exp(m.statistic()) == doctest::Approx(r).epsilon(1e-12));
  }
}

TEST_CASE("fixed-time rule") {
  const LLRPath flat = make_llr(std::vector<double>(101, 0.0), 0.01);
  const StopResult s = run_rule(DetectorConfig::fixed_time(0.1, 3), flat);
  CHECK(s.stop_time == doctest::Approx(0.3));
  CHECK_THROWS_AS(DetectorConfig::fixed_time(0.1, 0).validate(), ValidationError);
}

TEST_CASE("restart puts CUSUM at S = 1 and SR at R = 0") {
  Monitor c(DetectorConfig::cusum_grid(0.1, 5.0), 0.1);
  c.push(-3.0);
  c.restart();
  CHECK(c.statistic() == 0.0);
  c.push(-2.5);
  CHECK(c.statistic() == doctest::Approx(0.5));
  Monitor r(DetectorConfig::shiryaev_roberts(0.1, 5.0), 0.1);
  r.push(1.0);
  r.restart();
  r.push(1.5);
  CHECK(r.statistic() == doctest::Approx(0.5));
}

TEST_CASE("i.i.d. CUSUM on increments") {
  IncrementSeries s{0.5, {1.0, 1.0, 1.0, 1.0}};
  const IncrementLaw q0 = IncrementLaw::gaussian(0.0, 1.0), q1 = IncrementLaw::gaussian(1.0, 1.0);
  // each step adds 1/2
  const StopResult r = run_rule(DetectorConfig::cusum_iid(1.0), s, q0, q1);
  CHECK(r.stop_time == doctest::Approx(1.0));
  CHECK(r.steps_taken == 2);
  CHECK_THROWS_AS(run_rule(DetectorConfig::cusum_grid(0.5, 1.0), s, q0, q1), ContractError);
  CHECK_THROWS_AS(run_rule(DetectorConfig::cusum_iid(1.0), ramp(1.0, 0.1, 5)), ContractError);
}

TEST_CASE("change-point estimate") {
  const std::vector<double> trace{kNegInf, -0.2, 0.1, 0.8};
  StopResult stop;
  stop.steps_taken = 3;
  CHECK(mle_changepoint(trace, stop, 1.0) == 1.0);

  // First excursion from zero.
  const LLRPath up = ramp(1.0, 0.1, 40);
  const DetectorConfig rule = DetectorConfig::cusum_grid(0.1, 1.0);
  const StopResult s1 = run_rule(rule, up);
  CHECK(mle_changepoint(statistic_trace(rule, up), s1, 0.1) == 0.0);

  // Negative drift until t = 3, then a ramp.
  std::vector<double> u;
  for (int i = 0; i <= 100; ++i) {
    const double t = i * 0.1;
    u.push_back(t <= 3.0 ? -t : -3.0 + 2.0 * (t - 3.0));
  }
  const LLRPath v = make_llr(u, 0.1);
  const StopResult s2 = run_rule(rule, v);
  REQUIRE_FALSE(s2.censored);
  CHECK(std::abs(mle_changepoint(statistic_trace(rule, v), s2, 0.1) - 3.0) <= 0.1 + 1e-9);

  StopResult cens;
  cens.censored = true;
  CHECK_THROWS_AS(mle_changepoint(trace, cens, 1.0), UndefinedEstimateError);
}

TEST_CASE("barriers on the intensity lattice are moved") {
  const ChangeModel m =
      build_change_model(LevySpec::compound_poisson(1.0, JumpDensity::exponential(1.0)),
                         LevySpec::compound_poisson(2.0, JumpDensity::exponential(1.0)));
  CHECK(avoid_lattice(2.0 * std::log(2.0), m) == doctest::Approx(2.0 * std::log(2.0) + 1e-6));
  CHECK(avoid_lattice(2.0, m) == 2.0);
  const ChangeModel b = build_change_model(LevySpec::brownian(1.0, 0.0), LevySpec::brownian(1.0, 1.0));
  CHECK(avoid_lattice(std::log(2.0), b) == std::log(2.0));
}

TEST_CASE("invalid detector configurations") {
  CHECK_THROWS_AS(DetectorConfig::cusum_grid(0.0, 1.0).validate(), ValidationError);
  CHECK_THROWS_AS(DetectorConfig::cusum_grid(0.1, -1.0).validate(), ValidationError);
  CHECK_THROWS_AS(Monitor(DetectorConfig::cusum_grid(0.15, 1.0), 0.1), AlignmentError);
}
