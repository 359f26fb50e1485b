#include <doctest.h>

#include <cmath>
#include <sstream>

#include "levydetect/errors.hpp"
#include "levydetect/paths.hpp"
#include "levydetect/stats.hpp"

using namespace levydetect;

namespace {

ChangeModel brownian(double mu) {
  return build_change_model(LevySpec::brownian(1.0, 0.0), LevySpec::brownian(1.0, mu));
}

ChangeModel poisson(double l0, double l1) {
  return build_change_model(LevySpec::compound_poisson(l0, JumpDensity::exponential(1.0)),
                            LevySpec::compound_poisson(l1, JumpDensity::exponential(1.0)));
}

ChangeModel gamma_pair(double a, double t0, double t1) {
  return build_change_model(LevySpec::gamma_subordinator(a, t0),
                            LevySpec::gamma_subordinator(a, t1));
}

}  // namespace

TEST_CASE("same stream, same path; different stream, different path") {
  const ChangeModel m = brownian(1.0);
  const SamplePath a = sample_changed_path(m, 1.0, 5.0, 0.01, RngStream{7, 3});
  const SamplePath b = sample_changed_path(m, 1.0, 5.0, 0.01, RngStream{7, 3});
  const SamplePath c = sample_changed_path(m, 1.0, 5.0, 0.01, RngStream{7, 4});
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  CHECK(a.steps() == 500);
  CHECK(a.values.size() == 501);
  CHECK(a.values[0] == 0.0);
}

TEST_CASE("values are the running sum of the increments") {
  const SamplePath p = sample_changed_path(poisson(1.0, 2.0), 2.0, 10.0, 0.05, RngStream{1, 1});
  double x = 0.0;
  for (std::size_t i = 0; i < p.steps(); ++i) {
    x += p.increments[i];
    CHECK(p.values[i + 1] == x);
  }
}

TEST_CASE("grid strides") {
  CHECK(grid_stride(0.3, 0.1) == 3);
  CHECK(grid_stride(1e-3, 1e-3) == 1);
  CHECK(grid_stride(0.016, 0.001) == 16);
  CHECK_THROWS_AS(grid_stride(0.15, 0.1), AlignmentError);
  CHECK_THROWS_AS(grid_stride(0.05, 0.1), AlignmentError);
  CHECK_THROWS_AS(grid_stride(0.0, 0.1), ValidationError);
}

TEST_CASE("restriction to a coarser grid telescopes") {
  const SamplePath p = sample_changed_path(brownian(1.0), kNever, 4.0, 0.01, RngStream{2, 0});
  const IncrementSeries s = restrict_to_grid(p, 0.1);
  REQUIRE(s.increments.size() == 40);
  double x = 0.0;
  for (std::size_t k = 0; k < s.increments.size(); ++k) {
    x += s.increments[k];
    CHECK(x == doctest::Approx(p.values[(k + 1) * 10]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(restrict_to_grid(p, 0.015), AlignmentError);
}

TEST_CASE("change point snaps to the grid") {
  const ChangeModel m = brownian(1.0);
  PathSimulator sim(m, 0.1234, 0.01, RngStream{1, 0});
  CHECK(sim.change_step() == 12);
  CHECK(sim.change_point() == doctest::Approx(0.12));
  PathSimulator never(m, kNever, 0.01, RngStream{1, 0});
  CHECK(std::isinf(never.change_point()));
}

TEST_CASE("invalid simulation inputs") {
  const ChangeModel m = brownian(1.0);
  CHECK_THROWS_AS(sample_changed_path(m, 0.0, -1.0, 0.01, RngStream{}), ValidationError);
  CHECK_THROWS_AS(sample_changed_path(m, 0.0, 1.0, 0.0, RngStream{}), ValidationError);
  CHECK_THROWS_AS(sample_changed_path(m, -1.0, 1.0, 0.01, RngStream{}), ValidationError);
  const ChangeModel bad =
      build_change_model(LevySpec::brownian(1.0, 0.0), LevySpec::brownian(2.0, 0.0));
  CHECK_THROWS_AS(sample_changed_path(bad, 0.0, 1.0, 0.01, RngStream{}), ContractError);
}

TEST_CASE("Brownian increments have the right moments before and after the change") {
  const SamplePath p = sample_changed_path(brownian(2.0), 50.0, 100.0, 0.01, RngStream{5, 0});
  std::vector<double> pre(p.increments.begin(), p.increments.begin() + 5000);
  std::vector<double> post(p.increments.begin() + 5000, p.increments.end());
  const auto a = stats::mean_se(pre);
  const auto b = stats::mean_se(post);
  CHECK(std::abs(a.mean - 0.0) < 4.0 * a.std_error);
  CHECK(std::abs(b.mean - 0.02) < 4.0 * b.std_error);
  CHECK(a.variance == doctest::Approx(0.01).epsilon(0.05));
  CHECK(b.variance == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("Poisson jump counts follow the active intensity") {
  const SamplePath p = sample_changed_path(poisson(1.0, 3.0), 2000.0, 4000.0, 0.5, RngStream{6, 0});
  std::size_t before = 0, after = 0;
  for (const Jump& j : p.jumps) (j.time <= 2000.0 ? before : after)++;
  // Poisson counts: sd sqrt(2000) ~ 45 and sqrt(6000) ~ 77.
  CHECK(std::abs(static_cast<double>(before) - 2000.0) < 4.0 * std::sqrt(2000.0));
  CHECK(std::abs(static_cast<double>(after) - 6000.0) < 4.0 * std::sqrt(6000.0));
  for (std::size_t i = 0; i < p.steps(); ++i) {
    double s = 0.0;
    for (const Jump& j : p.jumps_in_step(i)) {
      CHECK(j.time > i * 0.5 - 1e-12);
      CHECK(j.time <= (i + 1) * 0.5 + 1e-12);
      s += j.size;
    }
    CHECK(p.increments[i] == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("gamma increments, ledger and threshold") {
  const double a = 2.0, theta = 1.5, dt = 0.1;
  const SamplePath p = sample_changed_path(gamma_pair(a, 1.0, theta), 0.0, 200.0, dt, RngStream{8, 0});
  CHECK(p.ledger_threshold == doctest::Approx(1e-12 * theta));
  const auto m = stats::mean_se(p.increments);
  CHECK(std::abs(m.mean - a * theta * dt) < 4.0 * m.std_error);
  CHECK(m.variance == doctest::Approx(a * theta * theta * dt).epsilon(0.1));
  for (std::size_t i = 0; i < p.steps(); ++i) {
    double s = 0.0;
    for (const Jump& j : p.jumps_in_step(i)) {
      CHECK(j.size > p.ledger_threshold);
      s += j.size;
    }
    CHECK(s <= p.increments[i] * (1.0 + 1e-12));
    CHECK(p.increments[i] - s <= 1e-6);
  }
}

TEST_CASE("high-activity gamma keeps the ledger rate bounded") {
  const ChangeModel m = gamma_pair(200.0, 1.0, 1.2);
  PathSimulator sim(m, kNever, 0.01, RngStream{1, 0});
  // a E1(eps / theta) <= 1000
  const double z = sim.ledger_threshold() / 1.2;
  CHECK(200.0 * -std::expint(-z) <= 1000.0 * (1.0 + 1e-9));
  CHECK(sim.ledger_threshold() > 1e-12 * 1.2);
}

TEST_CASE("CSV dumps") {
  const SamplePath p = sample_changed_path(poisson(1.0, 2.0), 0.0, 1.0, 0.5, RngStream{1, 0});
  std::ostringstream a, b;
  write_path_csv(a, p);
  write_ledger_csv(b, p);
  CHECK(a.str().rfind("t,x\n0,0\n", 0) == 0);
  CHECK(b.str().rfind("t,jump_size\n", 0) == 0);
}
