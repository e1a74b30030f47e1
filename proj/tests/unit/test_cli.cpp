#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "doctest.h"

using namespace entropic;
using namespace entropic::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("entropic-cli-" + name);
  fs::remove_all(d);
  return d;
}

Config make(const std::string& cmd, json file, std::vector<Override> o, const fs::path& out) {
  o.push_back({"output_dir", out.string()});
  return resolve_config(cmd, file, o);
}

}  // namespace

TEST_CASE("config: defaults, overrides and unknown keys") {
  const auto c = resolve_config("entropy", json::object(), {parse_override("estimator.samples=64")});
  CHECK(c.estimator.samples == 64);
  CHECK(c.grid.points == 128);
  CHECK(c.resolved["estimator"]["samples"] == 64);
  CHECK(c.resolved["config_hash"] == c.hash);
  CHECK_THROWS_WITH_AS(resolve_config("entropy", json{{"estimator", {{"samplez", 3}}}}, {}),
                       doctest::Contains("estimator.samplez"), ConfigError);
  CHECK_THROWS_AS(resolve_config("entropy", json::object(), {parse_override("grid.bogus=1")}), ConfigError);
  CHECK_THROWS_AS(resolve_config("entropy", json{{"process", {{"type", "sde"}}}}, {}), ConfigError);
  CHECK_THROWS_AS(parse_override("novalue"), ConfigError);
  CHECK(parse_override("eval.method=kde").value == "kde");
  CHECK(parse_override("eval.nfe=[4,8]").value == json::array({4, 8}));
}

TEST_CASE("config hash: stable, sensitive to content, blind to output directory") {
  const auto a = resolve_config("entropy", json::object(), {{"output_dir", "x"}});
  const auto b = resolve_config("entropy", json::object(), {{"output_dir", "y"}});
  const auto c = resolve_config("entropy", json::object(), {{"seed", 3}});
  const auto d = resolve_config("schedule", json::object(), {});
  CHECK(a.hash == b.hash);
  CHECK(a.hash != c.hash);
  CHECK(a.hash != d.hash);
  CHECK(a.hash.size() == 16);
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
}

TEST_CASE("output directory comes from the config key, then the environment") {
  ::setenv(kOutputDirEnv, "/tmp/from-env", 1);
  CHECK(resolve_config("entropy", json::object(), {}).output_dir == "/tmp/from-env");
  CHECK(resolve_config("entropy", json::object(), {{"output_dir", "/tmp/key"}}).output_dir == "/tmp/key");
  ::unsetenv(kOutputDirEnv);
  CHECK(resolve_config("entropy", json::object(), {}).output_dir == "entropic-out");
}

TEST_CASE("stochastic commands require a seed") {
  const auto out = fresh_dir("seed");
  const auto c = make("sample", json::object(), {parse_override("schedule.nfe=5")}, out);
  std::ostringstream log;
  CHECK_THROWS_WITH_AS(cmd_sample(c, log), doctest::Contains("--seed"), ConfigError);
  const auto e = make("entropy", json::object(), {}, out);
  CHECK_THROWS_AS(cmd_entropy(e, log), ConfigError);
  const auto exact = make("entropy", json::object(), {parse_override("estimator.method=exact")}, out);
  CHECK_NOTHROW(cmd_entropy(exact, log));
}

TEST_CASE("entropy -> schedule -> sample -> eval pipeline") {
  const auto out = fresh_dir("pipeline");
  std::ostringstream log;
  const json dist{{"type", "point_mixture"}, {"weights", {0.5, 0.5}}, {"means", {-1.0, 1.0}}};
  const auto ent = make("entropy", json{{"distribution", dist}, {"seed", 4}},
                        {parse_override("estimator.samples=200"), parse_override("estimator.kind=entropic")}, out);
  const auto w1 = cmd_entropy(ent, log);
  const auto curve_path = out / ("curve-" + ent.hash + ".csv");
  CHECK(fs::exists(curve_path));
  CHECK(fs::exists(out / ("errors-" + ent.hash + ".csv")));
  CHECK(fs::exists(out / ("config-" + ent.hash + ".json")));

  const auto sch = make("schedule", json::object(),
                        {{"schedule.builder", "curve"}, {"schedule.curve", curve_path.string()}, {"schedule.steps", 6}}, out);
  cmd_schedule(sch, log);
  const auto sched_path = out / ("schedule-" + sch.hash + ".json");
  const auto sched = io::schedule_from_json(io::read_file(sched_path));
  CHECK(sched.steps() == 6);
  CHECK(sched.label() == "entropic(steps=6)");

  const auto smp = make("sample", json{{"distribution", dist}},
                        {{"sampler.schedule", sched_path.string()}, {"sampler.paths", 500}, {"seed", 8}}, out);
  cmd_sample(smp, log);
  const auto samples_path = out / ("samples-" + smp.hash + ".csv");
  const auto side = io::sidecar_from_json(io::read_file(out / ("samples-" + smp.hash + ".json")));
  CHECK(side.seed == 8);
  CHECK(side.nfe == 7);
  CHECK(side.config_hash == smp.hash);

  const auto ev = make("eval", json{{"distribution", dist}}, {{"eval.samples", samples_path.string()}}, out);
  cmd_eval(ev, log);
  std::istringstream rep(io::read_file(out / ("kl-" + ev.hash + ".csv")));
  const auto entries = io::read_kl_report(rep);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].seed == 8);
  CHECK(entries[0].nfe == 7);
  CHECK(std::isfinite(entries[0].kl_mean));

  // Changing an input file changes the hash of the commands that read it.
  std::ofstream(curve_path, std::ios::app) << "";
  const auto again = make("schedule", json::object(),
                          {{"schedule.builder", "curve"}, {"schedule.curve", curve_path.string()}, {"schedule.steps", 6}}, out);
  CHECK(again.hash == sch.hash);
  fs::remove_all(out);
}

TEST_CASE("import-errors converts loss tables") {
  const auto out = fresh_dir("import");
  fs::create_directories(out);
  const auto in = out / "loss.csv";
  std::ofstream(in) << "t,loss,lambda\n0.5,2.0,1.0\n1.0,1.0,2.0\n";
  const auto c = make("import-errors", json::object(), {{"import.input", in.string()}, {"import.format", "loss"}}, out);
  std::ostringstream log;
  cmd_import_errors(c, log);
  std::istringstream t(io::read_file(out / ("errors-" + c.hash + ".csv")));
  const auto table = io::read_error_table(t);
  CHECK(table.eps2[0] == 2.0);
  CHECK(table.eps2[1] == 0.5);
  std::ofstream(in) << "t,loss\n";
  const auto bad = make("import-errors", json::object(), {{"import.input", in.string()}, {"import.format", "loss"}}, out);
  CHECK_THROWS_AS(cmd_import_errors(bad, log), io::FormatError);
  fs::remove_all(out);
}

TEST_CASE("reproduce presets resolve") {
  for (const auto& name : reproduce_presets()) {
    const auto c = resolve_config("reproduce " + name, reproduce_preset(name), {{"seed", 1}});
    CHECK_NOTHROW(make_distribution(c));
    const auto spec = make_process(c.process);
    CHECK_NOTHROW(make_kl_settings(c, make_distribution(c)));
    CHECK(c.eval.schedules.size() >= 3);
    (void)spec;
  }
  CHECK_THROWS_AS(reproduce_preset("fig9"), ConfigError);
  const auto fig3a = resolve_config("reproduce fig3a", reproduce_preset("fig3a"), {{"seed", 1}});
  CHECK(make_distribution(fig3a).components() == 15);
  CHECK(make_kl_settings(fig3a, make_distribution(fig3a)).method == KlMethod::binned);
}

TEST_CASE("small gaussian-optimal reproduction writes every artifact") {
  const auto out = fresh_dir("repro");
  const auto c = make("reproduce gaussian-optimal", reproduce_preset("gaussian-optimal"),
                      {{"seed", 2}, {"eval.repeats", 2}, {"eval.paths", 500}, {"eval.nfe", json::array({4, 8})}}, out);
  std::ostringstream log;
  const auto written = cmd_reproduce(c, log);
  CHECK(written.size() == 6);
  for (const auto& p : written) {
    CHECK(fs::exists(p));
    CHECK(p.filename().string().find(c.hash) != std::string::npos);
  }
  fs::remove_all(out);
}
