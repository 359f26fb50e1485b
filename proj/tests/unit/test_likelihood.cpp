#include <doctest.h>

#include <cmath>

#include "levydetect/errors.hpp"
#include "levydetect/likelihood.hpp"
#include "levydetect/stats.hpp"

using namespace levydetect;

namespace {

ChangeModel brownian(double s, double b0, double b1) {
  return build_change_model(LevySpec::brownian(s, b0), LevySpec::brownian(s, b1));
}

std::vector<ChangeModel> all_families() {
  return {
      brownian(1.0, 0.0, 1.0),
      build_change_model(LevySpec::compound_poisson(1.0, JumpDensity::exponential(1.0)),
                         LevySpec::compound_poisson(2.0, JumpDensity::exponential(1.0))),
      build_change_model(
          LevySpec::jump_diffusion(1.0, 0.0, 1.0, JumpDensity::gaussian(0.0, 0.5)),
          LevySpec::jump_diffusion(1.0, 0.5, 1.5, JumpDensity::gaussian(0.3, 0.5))),
      build_change_model(LevySpec::gamma_subordinator(2.0, 1.0),
                         LevySpec::gamma_subordinator(2.0, 1.5)),
  };
}

}  // namespace

TEST_CASE("Brownian U in closed form") {
  const double s = 0.8, b0 = 0.2, b1 = 1.0;
  const ChangeModel m = brownian(s, b0, b1);
  const SamplePath p = sample_changed_path(m, 2.0, 5.0, 0.01, RngStream{3, 0});
  const LLRPath u = llr_path(m, p);
  const double a = (b1 - b0) / (s * s);
  for (std::size_t i = 0; i < p.values.size(); i += 37) {
    const double t = i * 0.01;
    const double expect = a * (p.values[i] - b0 * t) - 0.5 * a * a * s * s * t;
    CHECK(u.u_values[i] == doctest::Approx(expect).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("intensity-only U counts jumps") {
  const double l0 = 1.0, l1 = 2.5;
  const ChangeModel m =
      build_change_model(LevySpec::compound_poisson(l0, JumpDensity::exponential(2.0)),
                         LevySpec::compound_poisson(l1, JumpDensity::exponential(2.0)));
  const SamplePath p = sample_changed_path(m, 3.0, 10.0, 0.1, RngStream{4, 0});
  const LLRPath u = llr_path(m, p);
  std::size_t count = 0;
  for (std::size_t i = 0; i < p.steps(); ++i) {
    count += p.jumps_in_step(i).size();
    const double t = (i + 1) * 0.1;
    const double expect = count * std::log(l1 / l0) - (l1 - l0) * t;
    CHECK(u.u_values[i + 1] == doctest::Approx(expect).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("gamma U is affine in X") {
  const double a = 2.0, t0 = 1.0, t1 = 1.5;
  const ChangeModel m = build_change_model(LevySpec::gamma_subordinator(a, t0),
                                           LevySpec::gamma_subordinator(a, t1));
  const SamplePath p = sample_changed_path(m, 1.0, 3.0, 0.05, RngStream{5, 0});
  const LLRPath u = llr_path(m, p);
  const double c1 = 1.0 / t0 - 1.0 / t1;
  const double kappa = a * std::log(t1 / t0);
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double t = i * 0.05;
    CHECK(u.u_values[i] == doctest::Approx(c1 * p.values[i] - kappa * t).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("continuous and jump parts add up") {
  const ChangeModel m = all_families()[2];
  const SamplePath p = sample_changed_path(m, 1.0, 4.0, 0.01, RngStream{6, 0});
  const LLRPath full = llr_path(m, p);
  const LLRPath c = llr_path(m, p, LlrComponent::Continuous);
  const LLRPath j = llr_path(m, p, LlrComponent::Jump);
  for (std::size_t i = 0; i < full.u_values.size(); ++i) {
    CHECK(full.u_values[i] == doctest::Approx(c.u_values[i] + j.u_values[i]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("increment llr agrees with the path llr on the coarse grid") {
  const ChangeModel m = brownian(1.3, -0.4, 0.6);
  const double delta = 0.1;
  const SamplePath p = sample_changed_path(m, 2.0, 6.0, 0.01, RngStream{7, 0});
  const LLRPath u = llr_path(m, p);
  const IncrementSeries s = restrict_to_grid(p, delta);
  const auto [q0, q1] = brownian_increment_laws(m, delta);
  double acc = 0.0;
  for (std::size_t k = 0; k < s.increments.size(); ++k) {
    acc += llr_increment_iid(q0, q1, s.increments[k]);
    CHECK(acc == doctest::Approx(u.u_values[(k + 1) * 10]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("increment llr formulas") {
  const IncrementLaw g0 = IncrementLaw::gaussian(0.0, 1.0), g1 = IncrementLaw::gaussian(1.0, 1.0);
  // log N(x;1,1) - log N(x;0,1) = x - 1/2
  CHECK(llr_increment_iid(g0, g1, 0.7) == doctest::Approx(0.2));
  const IncrementLaw p0 = IncrementLaw::poisson(1.0), p1 = IncrementLaw::poisson(2.0);
  CHECK(llr_increment_iid(p0, p1, 3.0) == doctest::Approx(3.0 * std::log(2.0) - 1.0));
  CHECK_THROWS_AS(llr_increment_iid(p0, p1, 1.5), DomainError);
  CHECK_THROWS_AS(llr_increment_iid(g0, IncrementLaw::gaussian(1.0, 2.0), 0.0), ValidationError);
  CHECK_THROWS_AS(llr_increment_iid(g0, p1, 0.0), ValidationError);
}

TEST_CASE("cocycle: U over [s, t] from the segment equals U_t - U_s") {
  const ChangeModel m = all_families()[1];
  const SamplePath p = sample_changed_path(m, 1.0, 5.0, 0.05, RngStream{8, 0});
  const LLRPath u = llr_path(m, p);
  const LlrStep step(m);
  const std::size_t s = 20;
  double seg = 0.0;
  for (std::size_t i = s; i < p.steps(); ++i) {
    seg += step(p.increments[i], p.jumps_in_step(i), p.grid_dt);
    CHECK(seg == doctest::Approx(u.u_values[i + 1] - u.u_values[s]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("family mismatch between path and model") {
  const ChangeModel a = brownian(1.0, 0.0, 1.0);
  const ChangeModel b = all_families()[1];
  const SamplePath p = sample_changed_path(a, 0.0, 1.0, 0.1, RngStream{});
  CHECK_THROWS_AS(llr_path(b, p), ContractError);
  CHECK_THROWS_AS(brownian_increment_laws(b, 0.1), ContractError);
}

TEST_CASE("exp(U) has unit mean under the in-control law for every family") {
  for (const ChangeModel& m : all_families()) {
    const MartingaleCheck c = martingale_check(m, 1.0, 20000, 11);
    INFO(m.digest(), " mean ", c.report.estimate, " se ", c.report.std_error);
    CHECK(c.passed);
  }
}

TEST_CASE("mean slope of U before and after the change") {
  for (const ChangeModel& m : all_families()) {
    std::vector<double> pre, post;
    for (std::uint64_t r = 0; r < 4000; ++r) {
      const LLRPath a = llr_path(m, sample_changed_path(m, kNever, 1.0, 0.05, RngStream{12, r}));
      const LLRPath b = llr_path(m, sample_changed_path(m, 0.0, 1.0, 0.05, RngStream{13, r}));
      pre.push_back(a.u_values.back());
      post.push_back(b.u_values.back());
    }
    const auto a = stats::mean_se(pre);
    const auto b = stats::mean_se(post);
    INFO(m.digest());
    CHECK(std::abs(a.mean - m.u_drift_pre()) < 4.0 * a.std_error);
    CHECK(std::abs(b.mean - m.u_drift_post()) < 4.0 * b.std_error);
  }
}
