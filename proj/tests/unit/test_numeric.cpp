#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "entropic/numeric.hpp"

using namespace entropic;

TEST_CASE("streams are keyed by seed, index and domain") {
  auto a = make_stream(7, 3, 0), b = make_stream(7, 3, 0);
  CHECK(a() == b());
  auto c = make_stream(7, 4, 0), d = make_stream(7, 3, 1), e = make_stream(8, 3, 0);
  const auto ref = make_stream(7, 3, 0)();
  CHECK(c() != ref);
  CHECK(d() != ref);
  CHECK(e() != ref);
}

TEST_CASE("pairwise sum and mean/stderr") {
  std::vector<double> v(1000, 0.1);
  CHECK(pairwise_sum(v) == doctest::Approx(100.0).epsilon(1e-14));
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const auto est = mean_and_stderr(x);
  CHECK(est.mean == 2.5);
  // sample sd sqrt(5/3), stderr sd/2
  CHECK(est.std_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(mean_and_stderr(std::vector<double>{3.0}).std_error == 0.0);
}

TEST_CASE("log_sum_exp and softmax stay finite for large logits") {
  const std::vector<double> v{1000.0, 1000.0};
  CHECK(log_sum_exp(v) == doctest::Approx(1000.0 + std::log(2.0)));
  CHECK(log_sum_exp(std::vector<double>{}) == -std::numeric_limits<double>::infinity());
  std::vector<double> s{-1000.0, 0.0, 1000.0};
  softmax(s);
  CHECK(s[2] == doctest::Approx(1.0));
  CHECK(s[0] == 0.0);
}

TEST_CASE("interpolation and its inverse") {
  const std::vector<double> xs{0.0, 1.0, 2.0, 3.0}, ys{0.0, 1.0, 1.0, 4.0};
  CHECK(interp_linear(xs, ys, 2.5) == doctest::Approx(2.5));
  CHECK(interp_linear(xs, ys, -1.0) == 0.0);
  CHECK(interp_linear(xs, ys, 9.0) == 4.0);
  CHECK(interp_inverse(xs, ys, 0.5) == doctest::Approx(0.5));
  CHECK(interp_inverse(xs, ys, 1.0) == 1.0);  // flat run: left end
  CHECK(interp_inverse(xs, ys, 2.5) == doctest::Approx(2.5));
  CHECK_THROWS_AS(interp_inverse(xs, ys, 5.0), std::out_of_range);
}

TEST_CASE("spaced grids hit their endpoints exactly") {
  const auto g = geomspace(0.002, 80.0, 7);
  CHECK(g.front() == 0.002);
  CHECK(g.back() == 80.0);
  CHECK(g[3] == doctest::Approx(std::sqrt(0.002 * 80.0)));
  const auto l = linspace(-1.0, 1.0, 5);
  CHECK(l[2] == doctest::Approx(0.0));
  CHECK(l.back() == 1.0);
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-310, 80.0}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("parallel_for rethrows on the caller") {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), [&](std::size_t i) { hit[i] = 1; });
  int total = 0;
  for (int h : hit) total += h;
  CHECK(total == 100);
  CHECK_THROWS_AS(parallel_for(50, [](std::size_t i) {
                    if (i == 17) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}
