#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "entropic/entropy.hpp"
#include "entropic/process.hpp"

namespace entropic {

/// Sampling schedule t_N > ... > t_0 with the noise level and scale at each
/// time. Solvers only read (sigma, scale), so one schedule can drive any
/// process with the same noise levels.
class Schedule {
 public:
  /// All three sequences must have equal length >= 2, times and sigmas
  /// strictly descending, sigmas and scales positive.
  Schedule(std::string label, std::vector<double> times, std::vector<double> sigmas, std::vector<double> scales);

  /// Descending times evaluated through `spec`.
  static Schedule from_times(const DiffusionSpec& spec, std::vector<double> times, std::string label);
  /// Descending noise levels mapped to times of `spec`; sigmas are kept verbatim.
  static Schedule from_sigmas(const DiffusionSpec& spec, std::vector<double> sigmas, std::string label);

  const std::string& label() const noexcept { return label_; }
  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<double>& sigmas() const noexcept { return sigmas_; }
  const std::vector<double>& scales() const noexcept { return scales_; }

  std::size_t points() const noexcept { return times_.size(); }
  std::size_t steps() const noexcept { return times_.size() - 1; }
  NoiseLevel level(std::size_t i) const { return {sigmas_[i], scales_[i]}; }

  /// Throws std::domain_error if any time lies outside `spec`'s domain.
  void require_within(const DiffusionSpec& spec) const;

  friend bool operator==(const Schedule&, const Schedule&) = default;

 private:
  std::string label_;
  std::vector<double> times_;
  std::vector<double> sigmas_;
  std::vector<double> scales_;
};

/// Karras et al. noise levels, descending: (smax^(1/rho) + i/N (smin^(1/rho) - smax^(1/rho)))^rho.
std::vector<double> edm_sigmas(double sigma_min, double sigma_max, double rho, std::size_t steps);

Schedule edm_schedule(const DiffusionSpec& spec, double sigma_min, double sigma_max, double rho, std::size_t steps);

Schedule uniform_schedule(const DiffusionSpec& spec, double t_min, double t_max, std::size_t steps);

/// KL-optimal schedule for N(0, c^2 I) data under deterministic DDIM:
/// sigma_i = c tan(a_min + i/N (a_max - a_min)), a = arctan(sigma / c),
/// with the bounds taken from sigma(t_min) and sigma(t_max).
Schedule gaussian_optimal_schedule(const DiffusionSpec& spec, double c, double t_min, double t_max,
                                   std::size_t steps);

/// Inverts `curve` at N+1 equally spaced levels between phi(t_min) and
/// phi(t_max). Plateaus at the end levels are allowed (discrete data gives
/// eps^2 == 0 near t_min); a flat run at any other level throws std::invalid_argument.
Schedule entropic_schedule(const DiffusionSpec& spec, const EntropyCurve& curve, double t_min, double t_max,
                           std::size_t steps);

/// Same construction for an analytic clock.
Schedule entropic_schedule(const DiffusionSpec& spec, const TimeChange& clock, double t_min, double t_max,
                           std::size_t steps, std::string label = "entropic");

/// The same noise levels expressed in `target`'s time.
Schedule match_sigmas(const DiffusionSpec& target, const Schedule& source);

/// Rescaled entropic time of N(0, c^2 I_D) under the VE process, D c arctan(t/c), as a clock.
TimeChange gaussian_rescaled_clock(double c, std::size_t dim, double t_min, double t_max);

/// Ascending time grid whose noise levels follow the EDM spacing; the
/// default grid for error tables.
std::vector<double> edm_time_grid(const DiffusionSpec& spec, std::size_t points = 128, double rho = 7.0,
                                  double sigma_min = 0.002, double sigma_max = 80.0);

}  // namespace entropic
