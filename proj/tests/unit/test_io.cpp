#include <filesystem>
#include <sstream>
#include <string>

#include "doctest.h"
#include "entropic/io.hpp"

using namespace entropic;

TEST_CASE("error table round trip is exact") {
  const auto ve = DiffusionSpec::ve();
  const auto dist = Mixture::gaussian({0.4, 0.6}, {{-1.0}, {1.0}}, {{0.2}, {0.1}});
  const auto t = estimate_error_table(exact_denoiser(dist), ve, mixture_sampler(dist), 1, edm_time_grid(ve, 16), 50, 3);
  std::stringstream ss;
  io::write_error_table(ss, t);
  const auto back = io::read_error_table(ss, "t.csv");
  CHECK(back.times == t.times);
  CHECK(back.eps2 == t.eps2);
  CHECK(back.provenance.method == "imported");
}

TEST_CASE("per-basis table round trip") {
  ErrorTable t;
  t.times = {0.1, 0.2};
  t.eps2 = {0.3, 0.7};
  t.basis_count = 2;
  t.per_basis = {0.1, 0.2, 0.3, 0.4};
  std::stringstream ss;
  io::write_error_table(ss, t);
  CHECK(ss.str().rfind("t,eps2_total,eps2_b0,eps2_b1\n", 0) == 0);
  const auto back = io::read_error_table(ss);
  CHECK(back.per_basis == t.per_basis);
}

TEST_CASE("malformed tables name the line") {
  std::istringstream bad_num("t,eps2\n0.1,0.5\n0.2,abc\n");
  CHECK_THROWS_WITH_AS(io::read_error_table(bad_num, "e.csv"), doctest::Contains("e.csv:3:"), io::FormatError);
  std::istringstream bad_header("time,eps\n0.1,0.5\n");
  CHECK_THROWS_AS(io::read_error_table(bad_header), io::FormatError);
  std::istringstream non_mono("t,eps2\n0.2,0.5\n0.1,0.5\n");
  CHECK_THROWS_WITH_AS(io::read_error_table(non_mono, "e.csv"), doctest::Contains("strictly increasing"), io::FormatError);
  std::istringstream cols("t,eps2\n0.1\n");
  CHECK_THROWS_AS(io::read_error_table(cols), io::FormatError);
}

TEST_CASE("loss tables convert with eps2 = loss / (lambda s^2)") {
  const auto vp = DiffusionSpec::vp();
  std::istringstream in("t,loss,lambda\n0.1,2.0,4.0\n0.5,1.0,0.5\n");
  const auto t = io::read_loss_table(in, vp);
  CHECK(t.eps2[0] == doctest::Approx(2.0 / (4.0 * vp.scale(0.1) * vp.scale(0.1))));
  CHECK(t.eps2[1] == doctest::Approx(1.0 / (0.5 * vp.scale(0.5) * vp.scale(0.5))));
  std::istringstream out_of_domain("t,loss,lambda\n2.0,1.0,1.0\n");
  CHECK_THROWS_AS(io::read_loss_table(out_of_domain, vp), io::FormatError);
}

TEST_CASE("curve, schedule, mixture and samples round trips") {
  const EntropyCurve c({0.1, 0.5, 2.0}, {0.0, 0.25, 1.0 / 3.0}, CurveKind::rescaled);
  std::stringstream cs;
  io::write_curve(cs, c);
  const auto cb = io::read_curve(cs);
  CHECK(cb.values() == c.values());
  CHECK(cb.kind() == CurveKind::rescaled);

  const auto s = edm_schedule(DiffusionSpec::vp(), 0.01, 50.0, 7.0, 5);
  CHECK(io::schedule_from_json(io::schedule_to_json(s)) == s);
  CHECK_THROWS_AS(io::schedule_from_json(R"({"label":"x","times":[1,2],"sigmas":[1,2],"scales":[1,1]})"),
                  io::FormatError);
  CHECK_THROWS_WITH_AS(io::schedule_from_json(R"({"label":"x","times":[2,1]})", "s.json"),
                       doctest::Contains("missing field"), io::FormatError);

  const auto m = Mixture::gaussian({0.25, 0.75}, {{0.0, 1.0}, {2.0, -1.0}}, {{0.1, 0.2}, {0.3, 0.4}});
  const auto mb = io::mixture_from_json(io::mixture_to_json(m));
  CHECK(mb.weights() == m.weights());
  CHECK(mb.variance(1)[1] == 0.4);
  const auto pts = io::mixture_from_json(R"({"type":"point_mixture","weights":[0.5,0.5],"means":[-1,1]})");
  CHECK(pts.kind() == MixtureKind::point);
  CHECK(pts.dim() == 1);
  CHECK_THROWS_AS(io::mixture_from_json(R"({"type":"cauchy","weights":[1],"means":[0]})"), io::FormatError);

  Samples x(2, 2, {0.1, -0.2, 1e-300, 3.0});
  std::stringstream ss;
  io::write_samples(ss, x);
  CHECK(ss.str().rfind("x0,x1\n", 0) == 0);
  CHECK(io::read_samples(ss) == x);

  io::SamplesSidecar sc;
  sc.seed = 5;
  sc.schedule_label = "edm(steps=3)";
  sc.solver = "ddim_stochastic";
  sc.nfe = 4;
  const auto sb = io::sidecar_from_json(io::sidecar_to_json(sc));
  CHECK(sb.seed == 5);
  CHECK(sb.schedule_label == sc.schedule_label);
}

TEST_CASE("KL report round trip, with infinities") {
  KlReport r;
  KlEntry e;
  e.schedule = "edm";
  e.solver = SolverKind::ddim_stochastic;
  e.nfe = 4;
  e.kl_mean = std::numeric_limits<double>::infinity();
  e.kl_std = std::nan("");
  e.repeats = 2;
  e.paths = 10;
  e.seed = 3;
  r.entries.push_back(e);
  std::stringstream ss;
  io::write_kl_report(ss, r);
  CHECK(ss.str().rfind("schedule,solver,nfe,kl_mean,kl_std,repeats,paths,seed\n", 0) == 0);
  const auto back = io::read_kl_report(ss);
  CHECK(back.size() == 1);
  CHECK(std::isinf(back[0].kl_mean));
  CHECK(std::isnan(back[0].kl_std));
}

TEST_CASE("write_file creates directories and replaces content") {
  const auto dir = std::filesystem::temp_directory_path() / "entropic-io-test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  io::write_file(dir / "a.txt", "one");
  io::write_file(dir / "a.txt", "two");
  CHECK(io::read_file(dir / "a.txt") == "two");
  std::filesystem::remove_all(dir.parent_path());
  CHECK_THROWS(io::read_file(dir / "missing.txt"));
}
