#include "config.hpp"

#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace entropic::cli {

namespace {

// Keys whose value is free-form and replaced wholesale.
bool opaque(const std::string& path) { return path == "distribution"; }

void merge(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) throw ConfigError("config" + (path.empty() ? "" : " key '" + path + "'") + ": expected an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("config: unknown key '" + key + "'");
    auto& slot = base[it.key()];
    if (slot.is_object() && !opaque(key)) {
      merge(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

void apply_override(json& config, const Override& o) {
  json* node = &config;
  std::string path;
  std::size_t start = 0;
  while (true) {
    const auto dot = o.key.find('.', start);
    const std::string part = o.key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    path = path.empty() ? part : path + "." + part;
    const bool inside_opaque = path.rfind("distribution.", 0) == 0;
    if (!node->is_object()) throw ConfigError("--set " + o.key + ": '" + path + "' is not an object");
    if (!node->contains(part) && !inside_opaque) throw ConfigError("--set: unknown key '" + path + "'");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = o.value;
}

template <class T>
T get(const json& root, const std::string& dotted) {
  const json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    node = &node->at(dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  try {
    return node->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + dotted + "': unexpected value " + node->dump());
  }
}

template <class T>
std::optional<T> get_optional(const json& root, const std::string& dotted) {
  const auto v = get<json>(root, dotted);
  if (v.is_null()) return std::nullopt;
  return get<T>(root, dotted);
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("config key '" + key + "': " + what);
}

void require_one_of(const std::string& value, std::initializer_list<const char*> allowed, const std::string& key) {
  for (const char* a : allowed) {
    if (value == a) return;
  }
  std::string list;
  for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
  throw ConfigError("config key '" + key + "': '" + value + "' is not one of " + list);
}

}  // namespace

json default_config() {
  return json{
      {"distribution", {{"preset", "gaussian"}, {"c", 1.0}, {"dim", 1}}},
      {"process", {{"type", "ve"}, {"t_min", nullptr}, {"t_max", nullptr}, {"beta_min", 0.1}, {"beta_d", 19.9}}},
      {"grid", {{"points", 128}, {"rho", 7.0}, {"sigma_min", 0.002}, {"sigma_max", 80.0}}},
      {"estimator",
       {{"method", "mc"},
        {"samples", 1024},
        {"rule", "trapezoid"},
        {"kind", "rescaled"},
        {"errors", ""},
        {"spectral", false},
        {"shape", json::array()},
        {"basis", "fourier"},
        {"amplitude_samples", 10000},
        {"radial_binning", "integer_ring"},
        {"annulus_width", 1.0},
        {"quadrature_panels", 256}}},
      {"schedule",
       {{"builder", "edm"},
        {"steps", 0},
        {"nfe", 0},
        {"c", 1.0},
        {"rho", 7.0},
        {"sigma_min", 0.002},
        {"sigma_max", 80.0},
        {"curve", ""},
        {"t_min", nullptr},
        {"t_max", nullptr}}},
      {"sampler", {{"solver", "ddim_stochastic"}, {"paths", 10000}, {"final_to_mean", true}, {"schedule", ""}}},
      {"eval",
       {{"samples", ""},
        {"schedules", {"uniform", "edm", "entropic"}},
        {"solvers", {"ddim_stochastic"}},
        {"nfe", {4, 8, 16, 32, 64}},
        {"repeats", 100},
        {"paths", 10000},
        {"method", "auto"},
        {"direction", "target_first"},
        {"bin_half_width", 0.0},
        {"bandwidth", 0.01},
        {"n_mc", 1000},
        {"c", 1.0}}},
      {"import", {{"input", ""}, {"format", "eps2"}}},
      {"seed", nullptr},
      {"output_dir", nullptr},
  };
}

Override parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects KEY=VALUE, got '" + text + "'");
  Override o{text.substr(0, eq), json()};
  const std::string raw = text.substr(eq + 1);
  o.value = json::parse(raw, nullptr, false);
  if (o.value.is_discarded()) o.value = raw;
  return o;
}

json load_config_file(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line and column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Config resolve_config(const std::string& command, const json& file, const std::vector<Override>& overrides) {
  json r = default_config();
  if (!file.is_null()) merge(r, file, "");
  for (const auto& o : overrides) apply_override(r, o);

  Config c;
  c.command = command;
  c.distribution = r.at("distribution");
  require(c.distribution.is_object() || c.distribution.is_string(), "distribution",
          "must be an object or a file path");

  c.process.type = get<std::string>(r, "process.type");
  require_one_of(c.process.type, {"ve", "vp"}, "process.type");
  c.process.t_min = get_optional<double>(r, "process.t_min");
  c.process.t_max = get_optional<double>(r, "process.t_max");
  c.process.beta_min = get<double>(r, "process.beta_min");
  c.process.beta_d = get<double>(r, "process.beta_d");

  c.grid.points = get<std::size_t>(r, "grid.points");
  c.grid.rho = get<double>(r, "grid.rho");
  c.grid.sigma_min = get<double>(r, "grid.sigma_min");
  c.grid.sigma_max = get<double>(r, "grid.sigma_max");
  require(c.grid.points >= 2, "grid.points", "must be at least 2");
  require(c.grid.rho > 0.0, "grid.rho", "must be positive");
  require(c.grid.sigma_min > 0.0 && c.grid.sigma_max > c.grid.sigma_min, "grid.sigma_min",
          "need 0 < sigma_min < sigma_max");

  auto& e = c.estimator;
  e.method = get<std::string>(r, "estimator.method");
  require_one_of(e.method, {"mc", "exact"}, "estimator.method");
  e.samples = get<std::size_t>(r, "estimator.samples");
  require(e.samples >= 1, "estimator.samples", "must be at least 1");
  e.rule = get<std::string>(r, "estimator.rule");
  require_one_of(e.rule, {"trapezoid", "left_riemann"}, "estimator.rule");
  e.kind = get<std::string>(r, "estimator.kind");
  require_one_of(e.kind, {"entropic", "rescaled"}, "estimator.kind");
  e.errors = get<std::string>(r, "estimator.errors");
  e.spectral = get<bool>(r, "estimator.spectral");
  e.shape = get<std::vector<std::size_t>>(r, "estimator.shape");
  require(e.shape.size() <= 2, "estimator.shape", "must be [L] or [H, W]");
  e.basis = get<std::string>(r, "estimator.basis");
  require_one_of(e.basis, {"fourier", "pixel"}, "estimator.basis");
  e.amplitude_samples = get<std::size_t>(r, "estimator.amplitude_samples");
  e.radial_binning = get<std::string>(r, "estimator.radial_binning");
  require_one_of(e.radial_binning, {"integer_ring", "annulus"}, "estimator.radial_binning");
  e.annulus_width = get<double>(r, "estimator.annulus_width");
  e.quadrature_panels = get<std::size_t>(r, "estimator.quadrature_panels");

  auto& s = c.schedule;
  s.builder = get<std::string>(r, "schedule.builder");
  require_one_of(s.builder, {"edm", "uniform", "gaussian_optimal", "curve"}, "schedule.builder");
  s.steps = get<std::size_t>(r, "schedule.steps");
  s.nfe = get<std::size_t>(r, "schedule.nfe");
  s.c = get<double>(r, "schedule.c");
  s.rho = get<double>(r, "schedule.rho");
  s.sigma_min = get<double>(r, "schedule.sigma_min");
  s.sigma_max = get<double>(r, "schedule.sigma_max");
  s.curve = get<std::string>(r, "schedule.curve");
  s.t_min = get_optional<double>(r, "schedule.t_min");
  s.t_max = get_optional<double>(r, "schedule.t_max");

  c.sampler.solver = get<std::string>(r, "sampler.solver");
  solver_kind_from_string(c.sampler.solver);
  c.sampler.paths = get<std::size_t>(r, "sampler.paths");
  require(c.sampler.paths >= 1, "sampler.paths", "must be at least 1");
  c.sampler.final_to_mean = get<bool>(r, "sampler.final_to_mean");
  c.sampler.schedule = get<std::string>(r, "sampler.schedule");

  auto& v = c.eval;
  v.samples = get<std::string>(r, "eval.samples");
  v.schedules = get<std::vector<std::string>>(r, "eval.schedules");
  for (const auto& name : v.schedules) {
    require_one_of(name, {"uniform", "edm", "entropic", "rescaled_entropic", "gaussian_optimal"}, "eval.schedules");
  }
  v.solvers = get<std::vector<std::string>>(r, "eval.solvers");
  for (const auto& name : v.solvers) {
    try {
      solver_kind_from_string(name);
    } catch (const std::invalid_argument& err) {
      throw ConfigError(std::string("config key 'eval.solvers': ") + err.what());
    }
  }
  v.nfe = get<std::vector<std::size_t>>(r, "eval.nfe");
  v.repeats = get<std::size_t>(r, "eval.repeats");
  v.paths = get<std::size_t>(r, "eval.paths");
  require(v.repeats >= 1 && v.paths >= 1, "eval.repeats", "repeats and paths must be at least 1");
  v.method = get<std::string>(r, "eval.method");
  require_one_of(v.method, {"auto", "binned", "kde"}, "eval.method");
  v.direction = get<std::string>(r, "eval.direction");
  require_one_of(v.direction, {"target_first", "samples_first"}, "eval.direction");
  v.bin_half_width = get<double>(r, "eval.bin_half_width");
  v.bandwidth = get<double>(r, "eval.bandwidth");
  require(v.bandwidth > 0.0, "eval.bandwidth", "must be positive");
  v.n_mc = get<std::size_t>(r, "eval.n_mc");
  v.c = get<double>(r, "eval.c");

  c.import.input = get<std::string>(r, "import.input");
  c.import.format = get<std::string>(r, "import.format");
  require_one_of(c.import.format, {"eps2", "loss"}, "import.format");

  c.seed = get_optional<std::uint64_t>(r, "seed");

  // Output directory: config key, environment, then a local default.
  if (const auto out = get_optional<std::string>(r, "output_dir")) {
    c.output_dir = *out;
  } else if (const char* env = std::getenv(kOutputDirEnv); env && *env) {
    c.output_dir = env;
  } else {
    c.output_dir = "entropic-out";
  }
  r["output_dir"] = c.output_dir.string();

  // Fingerprint input files so the hash changes when their content does.
  json inputs = json::object();
  const auto fingerprint = [&](const std::string& key, const std::string& path) {
    if (path.empty()) return;
    try {
      inputs[key] = fnv1a_hex(io::read_file(path));
    } catch (const std::exception& err) {
      throw ConfigError("config key '" + key + "': " + err.what());
    }
  };
  if (c.distribution.is_string()) fingerprint("distribution", c.distribution.get<std::string>());
  fingerprint("estimator.errors", e.errors);
  fingerprint("schedule.curve", s.curve);
  fingerprint("sampler.schedule", c.sampler.schedule);
  fingerprint("eval.samples", v.samples);
  fingerprint("import.input", c.import.input);

  json hashed = r;
  hashed.erase("output_dir");
  hashed["command"] = command;
  hashed["inputs"] = inputs;
  c.hash = fnv1a_hex(hashed.dump());

  r["command"] = command;
  r["inputs"] = inputs;
  r["config_hash"] = c.hash;
  c.resolved = std::move(r);
  return c;
}

std::uint64_t require_seed(const Config& config) {
  if (!config.seed) {
    throw ConfigError("command '" + config.command + "' is stochastic: pass --seed (or set \"seed\" in the config)");
  }
  return *config.seed;
}

DiffusionSpec make_process(const ProcessConfig& p) {
  if (p.type == "ve") return DiffusionSpec::ve(p.t_min.value_or(0.002), p.t_max.value_or(80.0));
  return DiffusionSpec::vp(p.beta_min, p.beta_d, p.t_min.value_or(1e-5), p.t_max.value_or(1.0));
}

namespace {

Mixture preset_distribution(const json& d, const Config& config) {
  const auto preset = d.at("preset").get<std::string>();
  const auto seed_of = [&]() -> std::uint64_t {
    if (d.contains("seed")) return d.at("seed").get<std::uint64_t>();
    if (config.seed) return *config.seed;
    throw ConfigError("distribution preset '" + preset + "' draws random locations: give it a \"seed\" or pass --seed");
  };
  if (preset == "gaussian") {
    return Mixture::isotropic_gaussian(d.value("c", 1.0), d.value("dim", std::size_t{1}), d.value("mean", 0.0));
  }
  if (preset == "diagonal_gaussian") {
    const auto stds = d.at("stds").get<std::vector<double>>();
    std::vector<double> var(stds.size());
    for (std::size_t i = 0; i < stds.size(); ++i) var[i] = stds[i] * stds[i];
    return Mixture::gaussian({1.0}, {std::vector<double>(stds.size(), 0.0)}, {var});
  }
  if (preset == "standardized_points" || preset == "standardized_gaussians") {
    const auto count = d.value("count", std::size_t{15});
    const auto loc = standardized_locations(count, seed_of());
    const std::vector<double> w(count, 1.0 / static_cast<double>(count));
    if (preset == "standardized_points") {
      std::vector<std::vector<double>> pts;
      for (double a : loc) pts.push_back({a});
      return Mixture::points(w, pts);
    }
    // Means shrunk so the mixture keeps unit total variance.
    const double var = d.value("variance", 0.1);
    if (!(var > 0.0 && var < 1.0)) throw ConfigError("distribution.variance must lie in (0, 1)");
    std::vector<std::vector<double>> means, vars;
    for (double a : loc) {
      means.push_back({a * std::sqrt(1.0 - var)});
      vars.push_back({var});
    }
    return Mixture::gaussian(w, means, vars);
  }
  throw ConfigError("distribution: unknown preset '" + preset + "'");
}

}  // namespace

Mixture make_distribution(const Config& config) {
  const auto& d = config.distribution;
  try {
    if (d.is_string()) {
      const auto path = d.get<std::string>();
      return io::mixture_from_json(io::read_file(path), path);
    }
    if (d.contains("preset")) return preset_distribution(d, config);
    return io::mixture_from_json(d.dump(), "distribution");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("distribution: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("distribution: ") + e.what());
  }
}

std::filesystem::path output_path(const Config& config, const std::string& stem, const std::string& ext) {
  return config.output_dir / (stem + "-" + config.hash + "." + ext);
}

}  // namespace entropic::cli
