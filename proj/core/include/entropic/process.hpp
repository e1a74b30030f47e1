#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace entropic {

using ScalarFn = std::function<double(double)>;

/// Noise level and input scale at one instant: the kernel is N(scale*x0, (scale*sigma)^2 I).
///
/// Denoisers and solvers only ever see this pair, never the raw time, which
/// is what makes them indifferent to how the process is parameterized in time.
struct NoiseLevel {
  double sigma = 0.0;
  double scale = 1.0;
};

/// A forward diffusion process dX = (s'/s) X dt + s sqrt(2 sigma' sigma) dW on [t_min, t_max].
///
/// Only s(t), sigma(t) and their time derivatives are stored; drift and
/// diffusion are always derived from them.
class DiffusionSpec {
 public:
  struct Functions {
    ScalarFn scale;
    ScalarFn noise;
    ScalarFn scale_rate;
    ScalarFn noise_rate;
  };

  DiffusionSpec(std::string name, Functions fns, double t_min, double t_max);

  /// Variance-exploding / EDM process: s = 1, sigma(t) = t.
  static DiffusionSpec ve(double t_min = 0.002, double t_max = 80.0);

  /// Variance-preserving process in EDM form with a linear beta schedule:
  /// sigma(t) = sqrt(exp(beta_d t^2 / 2 + beta_min t) - 1), s(t) = 1 / sqrt(1 + sigma(t)^2).
  static DiffusionSpec vp(double beta_min = 0.1, double beta_d = 19.9, double t_min = 1e-5,
                          double t_max = 1.0);

  /// User-supplied s and sigma with derivatives taken by central finite
  /// differences (step 1e-5 * t). Expect roughly 1e-10 relative accuracy in
  /// the derivatives for smooth inputs; s and sigma are evaluated slightly
  /// outside [t_min, t_max] at the domain ends.
  static DiffusionSpec with_finite_differences(std::string name, ScalarFn scale, ScalarFn noise,
                                               double t_min, double t_max);

  const std::string& name() const noexcept { return name_; }
  double t_min() const noexcept { return t_min_; }
  double t_max() const noexcept { return t_max_; }
  bool contains(double t) const noexcept;

  double scale(double t) const;
  double noise(double t) const;
  double scale_rate(double t) const;
  double noise_rate(double t) const;
  NoiseLevel level(double t) const { return {noise(t), scale(t)}; }

  /// Time at which sigma(t) == sigma; throws std::domain_error outside
  /// [noise(t_min), noise(t_max)].
  double time_at_noise(double sigma) const;

 private:
  void require_in_domain(double t) const;

  std::string name_;
  Functions fns_;
  double t_min_;
  double t_max_;
};

struct DriftDiffusion {
  double drift_coeff;  ///< f(x, t) = drift_coeff * x
  double diffusion;    ///< g(t)
};

DriftDiffusion drift_diffusion(const DiffusionSpec& spec, double t);

struct ForwardKernel {
  double mean_scale;
  double std;
};

ForwardKernel forward_kernel(const DiffusionSpec& spec, double t);

/// A proper time change: continuous, strictly increasing map phi on [t_min, t_max].
///
/// The inverse starts from piecewise-linear interpolation over a grid
/// (log-spaced when t_min > 0) and is polished with bracketed Newton steps,
/// so round trips hold to near machine precision.
class TimeChange {
 public:
  TimeChange(ScalarFn map, ScalarFn rate, double t_min, double t_max, std::size_t grid_points = 1024);

  static TimeChange identity(double t_min, double t_max);
  /// phi(t) = t^p, p > 0.
  static TimeChange power(double exponent, double t_min, double t_max);
  /// A map with a known inverse, used instead of the numeric one.
  static TimeChange closed_form(ScalarFn map, ScalarFn rate, ScalarFn inverse, double t_min, double t_max);

  double operator()(double t) const;
  double rate(double t) const;
  double inverse(double u) const;

  /// phi^{-1} as a time change on [phi(t_min), phi(t_max)].
  TimeChange inverted() const;
  /// phi(t) - phi(t_min), so the anchored map starts at zero.
  TimeChange anchored() const;

  double t_min() const noexcept { return t_min_; }
  double t_max() const noexcept { return t_max_; }
  double range_min() const noexcept { return grid_u_->front(); }
  double range_max() const noexcept { return grid_u_->back(); }

 private:
  TimeChange() = default;

  ScalarFn map_;
  ScalarFn rate_;
  ScalarFn inverse_;  // closed-form inverse when known (set by inverted())
  double t_min_ = 0.0;
  double t_max_ = 0.0;
  std::shared_ptr<const std::vector<double>> grid_t_;
  std::shared_ptr<const std::vector<double>> grid_u_;
};

/// Spec seen through the time change: s'(t) = s(phi(t)), sigma'(t) = sigma(phi(t)).
/// The result lives on phi's domain; phi's range must lie inside spec's domain.
DiffusionSpec apply_time_change(const DiffusionSpec& spec, const TimeChange& phi);

struct EquivalenceCheck {
  bool equivalent = false;
  double max_drift_residual = 0.0;
  double max_diffusion_residual = 0.0;
  double max_residual() const { return max_drift_residual > max_diffusion_residual ? max_drift_residual : max_diffusion_residual; }
};

/// Tests phi'(t) f_b(x, phi(t)) = f_a(x, t) and sqrt(phi'(t)) g_b(phi(t)) = g_a(t)
/// on `probes` points of phi's domain, with relative tolerance `tolerance`.
EquivalenceCheck check_equivalence(const DiffusionSpec& a, const DiffusionSpec& b, const TimeChange& phi,
                                   double tolerance = 1e-8, std::size_t probes = 64);

}  // namespace entropic
