#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <sstream>

namespace entropic::cli {

namespace {

std::string to_text(const ErrorTable& t) {
  std::ostringstream out;
  io::write_error_table(out, t);
  return out.str();
}

std::string to_text(const EntropyCurve& c) {
  std::ostringstream out;
  io::write_curve(out, c);
  return out.str();
}

void write(Written& written, const std::filesystem::path& path, const std::string& content) {
  io::write_file(path, content);
  written.push_back(path);
}

void write_snapshot(Written& written, const Config& config) {
  write(written, output_path(config, "config", "json"), config.resolved.dump(2) + "\n");
}

void report(std::ostream& log, const std::vector<std::string>& lines, const char* prefix) {
  for (const auto& l : lines) log << prefix << l << '\n';
}

std::size_t resolve_steps(const Config& config) {
  const auto& s = config.schedule;
  if (s.steps > 0 && s.nfe > 0) throw ConfigError("schedule: give either steps or nfe, not both");
  if (s.steps > 0) return s.steps;
  if (s.nfe > 0) {
    try {
      return steps_for_nfe(s.nfe, SolverOptions{solver_kind_from_string(config.sampler.solver), config.sampler.final_to_mean});
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("schedule.nfe: ") + e.what());
    }
  }
  throw ConfigError("schedule: set schedule.steps (--steps) or schedule.nfe (--nfe)");
}

ArrayShape spectral_shape(const Config& config, std::size_t dim) {
  const auto& s = config.estimator.shape;
  ArrayShape shape{1, dim};
  if (s.size() == 1) shape = {1, s[0]};
  if (s.size() == 2) shape = {s[0], s[1]};
  if (shape.size() != dim) {
    throw ConfigError("estimator.shape has " + std::to_string(shape.size()) + " entries, the data has dimension " +
                      std::to_string(dim));
  }
  return shape;
}

}  // namespace

std::vector<double> make_grid(const DiffusionSpec& spec, const GridConfig& grid) {
  return edm_time_grid(spec, grid.points, grid.rho, grid.sigma_min, grid.sigma_max);
}

ErrorTable make_error_table(const Config& config, const DiffusionSpec& spec, const Mixture& dist) {
  const auto& e = config.estimator;
  if (!e.errors.empty()) {
    std::istringstream in(io::read_file(e.errors));
    auto table = io::read_error_table(in, e.errors);
    table.validate(&spec);
    return table;
  }
  const auto grid = make_grid(spec, config.grid);
  if (e.method == "exact") {
    ExactTableOptions options;
    options.quadrature_panels = e.quadrature_panels;
    options.fallback_samples = e.samples;
    options.fallback_seed = config.seed.value_or(0);
    if (dist.components() > 1 && dist.dim() > 1) options.fallback_seed = require_seed(config);
    return exact_error_table(dist, spec, grid, options);
  }
  return estimate_error_table(exact_denoiser(dist), spec, mixture_sampler(dist), dist.dim(), grid, e.samples,
                              require_seed(config));
}

std::pair<double, double> schedule_interval(const Config& config, const DiffusionSpec& spec) {
  const auto& s = config.schedule;
  const double lo = s.t_min ? *s.t_min : spec.time_at_noise(s.sigma_min);
  const double hi = s.t_max ? *s.t_max : spec.time_at_noise(s.sigma_max);
  return {lo, hi};
}

Schedule make_schedule(const Config& config, const DiffusionSpec& spec) {
  const auto& s = config.schedule;
  const auto steps = resolve_steps(config);
  if (s.builder == "edm") return edm_schedule(spec, s.sigma_min, s.sigma_max, s.rho, steps);
  auto [lo, hi] = schedule_interval(config, spec);
  if (s.builder == "uniform") return uniform_schedule(spec, lo, hi, steps);
  if (s.builder == "gaussian_optimal") return gaussian_optimal_schedule(spec, s.c, lo, hi, steps);
  if (s.curve.empty()) throw ConfigError("schedule.builder = curve needs schedule.curve (--curve)");
  std::istringstream in(io::read_file(s.curve));
  const auto curve = io::read_curve(in, s.curve);
  if (!s.t_min) lo = std::max(lo, curve.t_min());
  if (!s.t_max) hi = std::min(hi, curve.t_max());
  return entropic_schedule(spec, curve, lo, hi, steps);
}

std::vector<ScheduleBuilder> make_builders(const Config& config, const DiffusionSpec& spec, const Mixture& dist) {
  const auto [lo, hi] = schedule_interval(config, spec);
  const auto& s = config.schedule;
  const auto rule = integration_rule_from_string(config.estimator.rule);
  std::shared_ptr<const ErrorTable> table;
  const auto curve_of = [&](CurveKind kind) {
    if (!table) table = std::make_shared<const ErrorTable>(make_error_table(config, spec, dist));
    return std::make_shared<const EntropyCurve>(integrate_entropy(spec, *table, kind, rule));
  };

  std::vector<ScheduleBuilder> out;
  for (const auto& name : config.eval.schedules) {
    if (name == "uniform") {
      out.push_back({name, [spec, lo, hi](std::size_t n) { return uniform_schedule(spec, lo, hi, n); }});
    } else if (name == "edm") {
      out.push_back({name, [spec, s](std::size_t n) { return edm_schedule(spec, s.sigma_min, s.sigma_max, s.rho, n); }});
    } else if (name == "gaussian_optimal") {
      const double c = config.eval.c;
      out.push_back({name, [spec, c, lo, hi](std::size_t n) { return gaussian_optimal_schedule(spec, c, lo, hi, n); }});
    } else {
      const auto curve = curve_of(name == "entropic" ? CurveKind::entropic : CurveKind::rescaled);
      out.push_back({name, [spec, curve, lo, hi](std::size_t n) { return entropic_schedule(spec, *curve, lo, hi, n); }});
    }
  }
  return out;
}

KlSettings make_kl_settings(const Config& config, const Mixture& dist) {
  const auto& v = config.eval;
  KlSettings k;
  k.nfe = v.nfe;
  k.repeats = v.repeats;
  k.paths = v.paths;
  k.seed = require_seed(config);
  k.final_to_mean = config.sampler.final_to_mean;
  if (v.method == "auto") {
    k.method = dist.kind() == MixtureKind::point ? KlMethod::binned : KlMethod::kde;
  } else {
    k.method = v.method == "binned" ? KlMethod::binned : KlMethod::kde;
  }
  k.direction = kl_direction_from_string(v.direction);
  k.bin_half_width = v.bin_half_width;
  k.bandwidth = v.bandwidth;
  k.n_mc = v.n_mc;
  return k;
}

// ---------------------------------------------------------------------------

Written cmd_entropy(const Config& config, std::ostream& log) {
  const auto spec = make_process(config.process);
  const auto dist = make_distribution(config);
  const auto rule = integration_rule_from_string(config.estimator.rule);
  Written written;

  if (config.estimator.spectral) {
    if (config.estimator.method != "mc" || !config.estimator.errors.empty()) {
      throw ConfigError("estimator.spectral needs estimator.method = mc and no imported table");
    }
    const auto seed = require_seed(config);
    const auto shape = spectral_shape(config, dist.dim());
    const auto basis = config.estimator.basis == "fourier" ? SpectralBasis::fourier : SpectralBasis::pixel;
    const auto grid = make_grid(spec, config.grid);
    const auto table = spectral_error_table(exact_denoiser(dist), spec, mixture_sampler(dist), shape, grid,
                                            config.estimator.samples, seed, basis);
    const auto amplitudes =
        spectral_amplitudes(mixture_sampler(dist), shape, config.estimator.amplitude_samples, seed, basis);
    const auto curves = spectral_rescaled_entropy(table, spec, amplitudes, rule);
    report(log, curves.combined.warnings, "warning: ");

    write(written, output_path(config, "errors", "csv"), to_text(table));
    write(written, output_path(config, "curve", "csv"), to_text(curves.combined));
    std::ostringstream amp;
    amp << "basis,amplitude\n";
    for (std::size_t b = 0; b < amplitudes.size(); ++b) amp << b << ',' << format_double(amplitudes[b]) << '\n';
    write(written, output_path(config, "amplitudes", "csv"), amp.str());
    if (basis == SpectralBasis::fourier) {
      const auto binning =
          config.estimator.radial_binning == "annulus" ? RadialBinning::annulus : RadialBinning::integer_ring;
      const auto profile = radial_profile(curves, shape, binning, config.estimator.annulus_width);
      std::ostringstream rad;
      rad << "t,bin,phi,binning\n";
      for (std::size_t k = 0; k < profile.size(); ++k) {
        for (std::size_t i = 0; i < profile[k].size(); ++i) {
          rad << format_double(table.times[i]) << ',' << k << ',' << format_double(profile[k][i]) << ','
              << config.estimator.radial_binning << '\n';
        }
      }
      write(written, output_path(config, "radial", "csv"), rad.str());
    }
  } else {
    const auto table = make_error_table(config, spec, dist);
    report(log, table.notes, "note: ");
    const auto curve = integrate_entropy(spec, table, curve_kind_from_string(config.estimator.kind), rule);
    report(log, curve.warnings, "warning: ");
    write(written, output_path(config, "errors", "csv"), to_text(table));
    write(written, output_path(config, "curve", "csv"), to_text(curve));
  }
  write_snapshot(written, config);
  return written;
}

Written cmd_schedule(const Config& config, std::ostream&) {
  const auto spec = make_process(config.process);
  const auto schedule = make_schedule(config, spec);
  Written written;
  write(written, output_path(config, "schedule", "json"), io::schedule_to_json(schedule));
  write_snapshot(written, config);
  return written;
}

Written cmd_sample(const Config& config, std::ostream&) {
  const auto seed = require_seed(config);
  const auto spec = make_process(config.process);
  const auto dist = make_distribution(config);
  const auto schedule = config.sampler.schedule.empty()
                            ? make_schedule(config, spec)
                            : io::schedule_from_json(io::read_file(config.sampler.schedule), config.sampler.schedule);
  const SolverOptions options{solver_kind_from_string(config.sampler.solver), config.sampler.final_to_mean};
  const auto samples = generate(spec, schedule, exact_denoiser(dist), dist.dim(), options, config.sampler.paths, seed);

  io::SamplesSidecar sidecar;
  sidecar.seed = seed;
  sidecar.schedule_label = schedule.label();
  sidecar.solver = to_string(options.kind);
  sidecar.paths = samples.rows();
  sidecar.dim = samples.cols();
  sidecar.nfe = function_evaluations(schedule, options);
  sidecar.final_to_mean = options.final_to_mean;
  sidecar.config_hash = config.hash;

  Written written;
  std::ostringstream out;
  io::write_samples(out, samples);
  write(written, output_path(config, "samples", "csv"), out.str());
  write(written, output_path(config, "samples", "json"), io::sidecar_to_json(sidecar));
  write_snapshot(written, config);
  return written;
}

Written cmd_eval(const Config& config, std::ostream&) {
  const auto spec = make_process(config.process);
  const auto dist = make_distribution(config);
  KlReport rep;

  if (!config.eval.samples.empty()) {
    const std::filesystem::path path = config.eval.samples;
    auto sidecar_path = path;
    sidecar_path.replace_extension(".json");
    const auto sidecar = io::sidecar_from_json(io::read_file(sidecar_path), sidecar_path.string());
    std::istringstream in(io::read_file(path));
    const auto samples = io::read_samples(in, path.string());
    auto settings_config = config;
    if (!settings_config.seed) settings_config.seed = sidecar.seed;
    const auto settings = make_kl_settings(settings_config, dist);
    KlEntry e;
    e.schedule = sidecar.schedule_label;
    e.solver = solver_kind_from_string(sidecar.solver);
    e.nfe = sidecar.nfe;
    e.kl_mean = evaluate_kl(samples, dist, settings, settings.seed);
    e.kl_std = 0.0;
    e.repeats = 1;
    e.paths = samples.rows();
    e.seed = settings.seed;
    e.infinite = std::isinf(e.kl_mean) ? 1 : 0;
    rep.entries.push_back(e);
    rep.method = settings.method == KlMethod::binned ? "binned" : "kde";
    rep.direction = to_string(settings.direction);
    if (settings.method == KlMethod::binned) {
      rep.bin_half_width = settings.bin_half_width > 0.0 ? settings.bin_half_width : default_bin_half_width(dist);
    } else {
      rep.bandwidth = settings.bandwidth;
      rep.n_mc = settings.n_mc;
    }
  } else {
    std::vector<SolverKind> solvers;
    for (const auto& s : config.eval.solvers) solvers.push_back(solver_kind_from_string(s));
    const auto settings = make_kl_settings(config, dist);
    rep = kl_experiment(spec, dist, make_builders(config, spec, dist), solvers, settings);
  }

  Written written;
  std::ostringstream out;
  io::write_kl_report(out, rep);
  write(written, output_path(config, "kl", "csv"), out.str());
  write_snapshot(written, config);
  return written;
}

Written cmd_import_errors(const Config& config, std::ostream&) {
  if (config.import.input.empty()) throw ConfigError("import-errors needs an input file (--input)");
  const auto spec = make_process(config.process);
  std::istringstream in(io::read_file(config.import.input));
  auto table = config.import.format == "loss" ? io::read_loss_table(in, spec, config.import.input)
                                              : io::read_error_table(in, config.import.input);
  try {
    table.validate(&spec);
  } catch (const std::invalid_argument& e) {
    throw io::FormatError(config.import.input + ": " + e.what());
  }
  Written written;
  write(written, output_path(config, "errors", "csv"), to_text(table));
  write_snapshot(written, config);
  return written;
}

const std::vector<std::string>& reproduce_presets() {
  static const std::vector<std::string> names{"fig3a", "fig3b", "gaussian-optimal"};
  return names;
}

json reproduce_preset(const std::string& name) {
  if (name == "fig3a") {
    return json{{"distribution", {{"preset", "standardized_points"}, {"count", 15}}},
                {"estimator", {{"method", "mc"}, {"samples", 1000}, {"kind", "entropic"}}},
                {"eval",
                 {{"schedules", {"uniform", "edm", "entropic"}},
                  {"solvers", {"ddim_stochastic"}},
                  {"nfe", {4, 8, 16, 32, 64}},
                  {"method", "binned"},
                  {"direction", "samples_first"}}}};
  }
  if (name == "fig3b") {
    return json{{"distribution", {{"preset", "standardized_gaussians"}, {"count", 15}, {"variance", 0.1}}},
                {"estimator", {{"method", "mc"}, {"samples", 1000}, {"kind", "rescaled"}}},
                {"eval",
                 {{"schedules", {"uniform", "edm", "entropic", "rescaled_entropic"}},
                  {"solvers", {"ddim_stochastic"}},
                  {"nfe", {4, 8, 16}},
                  {"method", "kde"}}}};
  }
  if (name == "gaussian-optimal") {
    return json{{"distribution", {{"preset", "gaussian"}, {"c", 1.0}, {"dim", 1}}},
                {"estimator", {{"method", "exact"}, {"kind", "rescaled"}}},
                {"eval",
                 {{"schedules", {"uniform", "edm", "gaussian_optimal", "rescaled_entropic"}},
                  {"solvers", {"ddim_deterministic"}},
                  {"nfe", {4, 8, 16, 32}},
                  {"method", "kde"},
                  {"c", 1.0}}}};
  }
  throw ConfigError("unknown reproduce preset '" + name + "' (fig3a, fig3b, gaussian-optimal)");
}

Written cmd_reproduce(const Config& config, std::ostream& log) {
  const auto spec = make_process(config.process);
  const auto dist = make_distribution(config);
  Written written;
  const auto table = make_error_table(config, spec, dist);
  report(log, table.notes, "note: ");
  const auto rule = integration_rule_from_string(config.estimator.rule);
  write(written, output_path(config, "errors", "csv"), to_text(table));
  for (const auto kind : {CurveKind::entropic, CurveKind::rescaled}) {
    const auto curve = integrate_entropy(spec, table, kind, rule);
    report(log, curve.warnings, "warning: ");
    write(written, output_path(config, std::string("curve-") + to_string(kind), "csv"), to_text(curve));
  }
  write(written, output_path(config, "distribution", "json"), io::mixture_to_json(dist));

  std::vector<SolverKind> solvers;
  for (const auto& s : config.eval.solvers) solvers.push_back(solver_kind_from_string(s));
  const auto rep = kl_experiment(spec, dist, make_builders(config, spec, dist), solvers, make_kl_settings(config, dist));
  std::ostringstream out;
  io::write_kl_report(out, rep);
  write(written, output_path(config, "kl", "csv"), out.str());
  write_snapshot(written, config);
  return written;
}

}  // namespace entropic::cli
