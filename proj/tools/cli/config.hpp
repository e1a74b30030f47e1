#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "entropic/entropic.hpp"
#include "json.hpp"

namespace entropic::cli {

using nlohmann::json;

/// Bad configuration; the message carries the key path or file position.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kOutputDirEnv = "ENTROPIC_OUTPUT_DIR";

struct ProcessConfig {
  std::string type = "ve";  // ve | vp
  std::optional<double> t_min;  // default: 0.002 (ve), 1e-5 (vp)
  std::optional<double> t_max;  // default: 80 (ve), 1 (vp)
  double beta_min = 0.1;
  double beta_d = 19.9;
};

struct GridConfig {
  std::size_t points = 128;
  double rho = 7.0;
  double sigma_min = 0.002;
  double sigma_max = 80.0;
};

struct EstimatorConfig {
  std::string method = "mc";  // mc | exact
  std::size_t samples = 1024;
  std::string rule = "trapezoid";
  std::string kind = "rescaled";  // entropic | rescaled
  std::string errors;             // existing ErrorTable CSV; skips estimation
  bool spectral = false;
  std::vector<std::size_t> shape;  // [H, W] or [L]; defaults to [dim]
  std::string basis = "fourier";
  std::size_t amplitude_samples = 10000;
  std::string radial_binning = "integer_ring";
  double annulus_width = 1.0;
  std::size_t quadrature_panels = 256;
};

struct ScheduleConfig {
  std::string builder = "edm";  // edm | uniform | gaussian_optimal | curve
  std::size_t steps = 0;        // 0: derive from nfe
  std::size_t nfe = 0;
  double c = 1.0;
  double rho = 7.0;
  double sigma_min = 0.002;
  double sigma_max = 80.0;
  std::string curve;  // EntropyCurve CSV for builder = curve
  std::optional<double> t_min;
  std::optional<double> t_max;
};

struct SamplerConfig {
  std::string solver = "ddim_stochastic";
  std::size_t paths = 10000;
  bool final_to_mean = true;
  std::string schedule;  // Schedule JSON
};

struct EvalConfig {
  std::string samples;  // samples CSV; when empty, run the full experiment
  std::vector<std::string> schedules{"uniform", "edm", "entropic"};
  std::vector<std::string> solvers{"ddim_stochastic"};
  std::vector<std::size_t> nfe{4, 8, 16, 32, 64};
  std::size_t repeats = 100;
  std::size_t paths = 10000;
  std::string method = "auto";  // auto | binned | kde
  std::string direction = "target_first";
  double bin_half_width = 0.0;
  double bandwidth = 0.01;
  std::size_t n_mc = 1000;
  double c = 1.0;  // for the gaussian_optimal builder
};

struct ImportConfig {
  std::string input;
  std::string format = "eps2";  // eps2 | loss
};

struct Config {
  std::string command;
  json distribution;
  ProcessConfig process;
  GridConfig grid;
  EstimatorConfig estimator;
  ScheduleConfig schedule;
  SamplerConfig sampler;
  EvalConfig eval;
  ImportConfig import;
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_dir;

  json resolved;     // full configuration with defaults, as written to the snapshot
  std::string hash;  // 16 hex digits over `resolved` minus output_dir
};

/// Defaults for every key; also the schema for unknown-key detection.
json default_config();

/// A KEY=VALUE override; VALUE is JSON if it parses, otherwise a string.
struct Override {
  std::string key;  // dotted path, e.g. "estimator.samples"
  json value;
};
Override parse_override(const std::string& text);

/// Merges `file` (may be null) and `overrides` over the defaults, validates,
/// and fingerprints referenced input files. Output directory precedence:
/// output_dir key, then $ENTROPIC_OUTPUT_DIR, then ./entropic-out.
Config resolve_config(const std::string& command, const json& file, const std::vector<Override>& overrides);

/// Reads a JSON config file; syntax errors report line and column.
json load_config_file(const std::filesystem::path& path);

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& data);

/// The seed, or a ConfigError telling the user to pass --seed.
std::uint64_t require_seed(const Config& config);

DiffusionSpec make_process(const ProcessConfig& p);
/// Distribution from inline JSON, a file path, or a preset object.
Mixture make_distribution(const Config& config);

/// <output_dir>/<stem>-<hash>.<ext>
std::filesystem::path output_path(const Config& config, const std::string& stem, const std::string& ext);

}  // namespace entropic::cli
