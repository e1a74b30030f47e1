#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

using entropic::cli::json;
using entropic::cli::Override;

// Shared flags; each maps onto a config key so the snapshot records it.
struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> mapped;  // key, raw value
};

// Like the file merge, but "distribution" is replaced whole.
void layer(json& base, const json& patch) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (it.key() != "distribution" && it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
      layer(base[it.key()], it.value());
    } else {
      base[it.key()] = it.value();
    }
  }
}

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& about, Flags& f) {
  auto* sub = app.add_subcommand(name, about);
  sub->add_option("-c,--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "RNG seed (required for stochastic steps)");
  sub->add_option("-o,--out", f.out, "output directory (default $ENTROPIC_OUTPUT_DIR, then ./entropic-out)");
  sub->add_option("--set", f.sets, "override a config key, KEY=VALUE (repeatable)");
  return sub;
}

void map_flag(CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help, Flags& f) {
  sub->add_option_function<std::string>(
      flag, [&f, key](const std::string& v) { f.mapped.emplace_back(key, v); }, help + " (" + key + ")");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = entropic::cli;

  CLI::App app{"Entropy-based time schedules for diffusion samplers"};
  app.require_subcommand(1);
  Flags f;

  auto* entropy = add_command(app, "entropy", "estimate the denoising error table and entropy curve", f);
  map_flag(entropy, "--method", "estimator.method", "mc or exact", f);
  map_flag(entropy, "--samples", "estimator.samples", "Monte Carlo samples per time", f);
  map_flag(entropy, "--kind", "estimator.kind", "entropic or rescaled", f);
  map_flag(entropy, "--errors", "estimator.errors", "use an existing error table", f);
  map_flag(entropy, "--points", "grid.points", "time grid size", f);

  auto* schedule = add_command(app, "schedule", "build a sampling schedule", f);
  map_flag(schedule, "--builder", "schedule.builder", "edm, uniform, gaussian_optimal or curve", f);
  map_flag(schedule, "--steps", "schedule.steps", "solver steps", f);
  map_flag(schedule, "--nfe", "schedule.nfe", "denoiser evaluations", f);
  map_flag(schedule, "--curve", "schedule.curve", "entropy curve CSV", f);

  auto* sample = add_command(app, "sample", "generate samples with the exact denoiser", f);
  map_flag(sample, "--schedule", "sampler.schedule", "schedule JSON", f);
  map_flag(sample, "--solver", "sampler.solver", "ddim_deterministic or ddim_stochastic", f);
  map_flag(sample, "--paths", "sampler.paths", "number of samples", f);
  map_flag(sample, "--nfe", "schedule.nfe", "denoiser evaluations when no schedule file is given", f);

  auto* eval = add_command(app, "eval", "KL divergence of samples, or a full schedule comparison", f);
  map_flag(eval, "--samples", "eval.samples", "samples CSV (sidecar JSON next to it)", f);
  map_flag(eval, "--repeats", "eval.repeats", "repeats per configuration", f);
  map_flag(eval, "--paths", "eval.paths", "samples per repeat", f);
  map_flag(eval, "--kl", "eval.method", "auto, binned or kde", f);

  auto* import = add_command(app, "import-errors", "convert external error or loss tables", f);
  map_flag(import, "--input", "import.input", "CSV to import", f);
  map_flag(import, "--format", "import.format", "eps2 or loss", f);

  auto* reproduce = add_command(app, "reproduce", "run a preset experiment end to end", f);
  std::string preset;
  reproduce->add_option("preset", preset, "fig3a, fig3b or gaussian-optimal")
      ->required()
      ->check(CLI::IsMember(cli::reproduce_presets()));
  map_flag(reproduce, "--repeats", "eval.repeats", "repeats per configuration", f);
  map_flag(reproduce, "--paths", "eval.paths", "samples per repeat", f);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();

    json file = json::object();
    if (name == "reproduce") file = cli::reproduce_preset(preset);
    if (!f.config.empty()) layer(file, cli::load_config_file(f.config));

    std::vector<Override> overrides;
    for (const auto& [key, raw] : f.mapped) overrides.push_back(cli::parse_override(key + "=" + raw));
    for (const auto& s : f.sets) overrides.push_back(cli::parse_override(s));
    if (f.seed) overrides.push_back({"seed", *f.seed});
    if (!f.out.empty()) overrides.push_back({"output_dir", f.out});

    const auto config = cli::resolve_config(name == "reproduce" ? "reproduce " + preset : name, file, overrides);

    cli::Written written;
    if (name == "entropy") written = cli::cmd_entropy(config, std::cerr);
    if (name == "schedule") written = cli::cmd_schedule(config, std::cerr);
    if (name == "sample") written = cli::cmd_sample(config, std::cerr);
    if (name == "eval") written = cli::cmd_eval(config, std::cerr);
    if (name == "import-errors") written = cli::cmd_import_errors(config, std::cerr);
    if (name == "reproduce") written = cli::cmd_reproduce(config, std::cerr);
    for (const auto& p : written) std::cout << p.string() << '\n';
    return EXIT_SUCCESS;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
