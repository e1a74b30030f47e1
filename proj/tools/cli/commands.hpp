#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace entropic::cli {

using Written = std::vector<std::filesystem::path>;

// Each command writes its outputs plus config-<hash>.json and returns the
// paths written. Diagnostics (warnings, notes) go to `log`.

Written cmd_entropy(const Config& config, std::ostream& log);
Written cmd_schedule(const Config& config, std::ostream& log);
Written cmd_sample(const Config& config, std::ostream& log);
Written cmd_eval(const Config& config, std::ostream& log);
Written cmd_import_errors(const Config& config, std::ostream& log);
Written cmd_reproduce(const Config& config, std::ostream& log);

/// Names accepted by `reproduce`.
const std::vector<std::string>& reproduce_presets();
/// Partial config for a preset; user config and flags are layered on top.
json reproduce_preset(const std::string& name);

// Building blocks shared with the tests.

std::vector<double> make_grid(const DiffusionSpec& spec, const GridConfig& grid);
ErrorTable make_error_table(const Config& config, const DiffusionSpec& spec, const Mixture& dist);
/// Default schedule interval: the times of [schedule.sigma_min, schedule.sigma_max] unless set.
std::pair<double, double> schedule_interval(const Config& config, const DiffusionSpec& spec);
Schedule make_schedule(const Config& config, const DiffusionSpec& spec);
std::vector<ScheduleBuilder> make_builders(const Config& config, const DiffusionSpec& spec, const Mixture& dist);
KlSettings make_kl_settings(const Config& config, const Mixture& dist);

}  // namespace entropic::cli
