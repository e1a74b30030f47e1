#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "entropic/entropy.hpp"
#include "entropic/schedule.hpp"

using namespace entropic;

TEST_CASE("EDM sigmas: endpoints, rho = 1 is linear") {
  const auto s = edm_sigmas(0.002, 80.0, 7.0, 10);
  CHECK(s.size() == 11);
  CHECK(s.front() == 80.0);
  CHECK(s.back() == 0.002);
  const double a = std::pow(80.0, 1.0 / 7.0), b = std::pow(0.002, 1.0 / 7.0);
  CHECK(s[3] == doctest::Approx(std::pow(a + 0.3 * (b - a), 7.0)));
  const auto lin = edm_sigmas(1.0, 5.0, 1.0, 4);
  CHECK(lin[1] == doctest::Approx(4.0));
}

TEST_CASE("schedules are descending and record their label") {
  const auto ve = DiffusionSpec::ve();
  const auto u = uniform_schedule(ve, 0.002, 80.0, 4);
  CHECK(u.times()[1] == doctest::Approx(80.0 - (80.0 - 0.002) / 4.0));
  CHECK(u.label() == "uniform(steps=4)");
  CHECK(u.steps() == 4);
  const auto e = edm_schedule(ve, 0.002, 80.0, 7.0, 8);
  CHECK(e.label() == "edm(rho=7,sigma_min=0.002,sigma_max=80,steps=8)");
  CHECK_THROWS_AS(Schedule("x", {1.0, 2.0}, {1.0, 2.0}, {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Schedule("x", {2.0, 1.0}, {2.0, 1.0}, {1.0, -1.0}), std::invalid_argument);
  CHECK_THROWS(edm_schedule(ve, 0.002, 80.0, 7.0, 0));
}

TEST_CASE("VP schedule maps sigmas to times of the process") {
  const auto vp = DiffusionSpec::vp();
  const auto sched = edm_schedule(vp, 0.01, 50.0, 7.0, 6);
  for (std::size_t i = 0; i < sched.points(); ++i) {
    CHECK(vp.noise(sched.times()[i]) == doctest::Approx(sched.sigmas()[i]).epsilon(1e-10));
    CHECK(sched.scales()[i] == doctest::Approx(vp.scale(sched.times()[i])));
  }
  CHECK_THROWS_AS(edm_schedule(vp, 0.01, 1000.0, 7.0, 6), std::domain_error);
}

TEST_CASE("gaussian optimal schedule is uniform in arctan(sigma / c)") {
  const auto ve = DiffusionSpec::ve();
  const double c = 0.5;
  const auto s = gaussian_optimal_schedule(ve, c, 0.002, 80.0, 5);
  const double a0 = std::atan(80.0 / c), a1 = std::atan(0.002 / c);
  for (std::size_t i = 0; i <= 5; ++i) {
    CHECK(std::atan(s.sigmas()[i] / c) == doctest::Approx(a0 + (a1 - a0) * double(i) / 5.0).epsilon(1e-12));
  }
}

TEST_CASE("entropic schedule inverts the curve at equal levels") {
  const auto ve = DiffusionSpec::ve();
  const EntropyCurve curve({0.002, 1.0, 80.0}, {0.0, 1.0, 2.0}, CurveKind::entropic);
  const auto s = entropic_schedule(ve, curve, 0.002, 80.0, 4);
  CHECK(s.times()[0] == 80.0);
  CHECK(s.times()[2] == doctest::Approx(1.0));
  CHECK(s.times()[4] == 0.002);
  CHECK(s.times()[1] == doctest::Approx(1.0 + 0.5 * (80.0 - 1.0)));
  CHECK(s.label() == "entropic(steps=4)");
}

TEST_CASE("entropic schedule: end plateaus allowed, interior plateaus rejected") {
  const auto ve = DiffusionSpec::ve();
  const EntropyCurve prefix({0.002, 0.01, 1.0, 80.0}, {0.0, 0.0, 1.0, 2.0}, CurveKind::entropic);
  const auto s = entropic_schedule(ve, prefix, 0.002, 80.0, 4);
  CHECK(s.times()[3] == doctest::Approx(0.01 + 0.5 * (1.0 - 0.01)));
  const EntropyCurve interior({0.002, 0.5, 1.0, 80.0}, {0.0, 1.0, 1.0, 2.0}, CurveKind::entropic);
  CHECK_THROWS_AS(entropic_schedule(ve, interior, 0.002, 80.0, 4), std::invalid_argument);
  const EntropyCurve constant({0.002, 80.0}, {0.0, 0.0}, CurveKind::entropic);
  CHECK_THROWS_AS(entropic_schedule(ve, constant, 0.002, 80.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(entropic_schedule(ve, prefix, 0.001, 80.0, 4), std::domain_error);
}

TEST_CASE("analytic Gaussian clock reproduces the optimal schedule") {
  const auto ve = DiffusionSpec::ve();
  const auto clock = gaussian_rescaled_clock(1.3, 2, 0.002, 80.0);
  CHECK(clock(2.0) == doctest::Approx(2.0 * 1.3 * std::atan(2.0 / 1.3)));
  CHECK(clock.inverse(clock(2.0)) == doctest::Approx(2.0));
  const auto a = entropic_schedule(ve, clock, 0.002, 80.0, 16);
  const auto b = gaussian_optimal_schedule(ve, 1.3, 0.002, 80.0, 16);
  for (std::size_t i = 0; i <= 16; ++i) CHECK(a.times()[i] == doctest::Approx(b.times()[i]).epsilon(1e-12));
}

TEST_CASE("match_sigmas keeps noise levels across processes") {
  const auto ve = DiffusionSpec::ve();
  const auto vp = DiffusionSpec::vp();
  const auto src = edm_schedule(ve, 0.01, 50.0, 7.0, 5);
  const auto m = match_sigmas(vp, src);
  CHECK(m.sigmas() == src.sigmas());
  CHECK(m.label() == src.label());
}

TEST_CASE("EDM time grid is ascending with EDM noise spacing") {
  const auto ve = DiffusionSpec::ve();
  const auto g = edm_time_grid(ve, 128);
  CHECK(g.size() == 128);
  CHECK(g.front() == doctest::Approx(0.002));
  CHECK(g.back() == doctest::Approx(80.0));
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
}
