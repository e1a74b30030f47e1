#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "entropic/numeric.hpp"
#include "entropic/process.hpp"

namespace entropic {

enum class MixtureKind { gaussian, point };

/// A finite mixture with diagonal covariances: either a Gaussian mixture
/// (every variance > 0) or a discrete point mixture (every variance == 0).
///
/// Under the forward kernel N(s x0, s^2 sigma^2 I) component k becomes
/// N(s mu_k, s^2 (sigma^2 + c_k^2)) per dimension, which gives closed forms
/// for the score, the posterior over x0 and the Hessian of log p_t.
class Mixture {
 public:
  static Mixture gaussian(std::vector<double> weights, std::vector<std::vector<double>> means,
                          std::vector<std::vector<double>> variances);
  static Mixture points(std::vector<double> weights, std::vector<std::vector<double>> points);

  /// Single isotropic Gaussian N(mean * 1, c^2 I) in `dim` dimensions.
  static Mixture isotropic_gaussian(double c, std::size_t dim = 1, double mean = 0.0);

  MixtureKind kind() const noexcept { return kind_; }
  std::size_t components() const noexcept { return weights_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  double weight(std::size_t k) const { return weights_[k]; }
  double log_weight(std::size_t k) const { return log_weights_[k]; }
  std::span<const double> mean(std::size_t k) const { return {means_.data() + k * dim_, dim_}; }
  std::span<const double> variance(std::size_t k) const { return {variances_.data() + k * dim_, dim_}; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// Shannon entropy of the component weights, -sum w log w. For a point
  /// mixture this is H[x0].
  double prior_entropy() const;

  /// Smallest pairwise Euclidean distance between component means.
  double min_separation() const;

  /// Draw one point into `out` (size dim()).
  void sample_into(Rng& rng, std::span<double> out) const;

 private:
  Mixture() = default;
  void finish();

  MixtureKind kind_ = MixtureKind::gaussian;
  std::size_t dim_ = 0;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<double> means_;      // K x D
  std::vector<double> variances_;  // K x D
  std::vector<double> cumulative_;  // running sum of weights, for sampling
};

/// Posterior over x0 given x_t: responsibilities plus per-component
/// Gaussian posteriors (means and variances are K x D, row-major).
struct Posterior {
  std::vector<double> responsibilities;
  std::vector<double> means;
  std::vector<double> variances;
};

// Each operation is available at a NoiseLevel (sigma, s) or at a spec time.
// All of them throw std::invalid_argument on non-finite input and
// std::domain_error for a point mixture at sigma == 0.

Posterior posterior(const Mixture& dist, NoiseLevel level, std::span<const double> x);
Posterior posterior(const Mixture& dist, const DiffusionSpec& spec, std::span<const double> x, double t);

void marginal_score(const Mixture& dist, NoiseLevel level, std::span<const double> x, std::span<double> out);
std::vector<double> marginal_score(const Mixture& dist, const DiffusionSpec& spec, std::span<const double> x,
                                   double t);

/// Posterior mean E[x0 | x_t] = sum_k r_k m_k.
void denoise(const Mixture& dist, NoiseLevel level, std::span<const double> x, std::span<double> out);
std::vector<double> denoise(const Mixture& dist, const DiffusionSpec& spec, std::span<const double> x, double t);

/// tr Var[x0 | x_t] by the law of total variance over components.
double posterior_variance_trace(const Mixture& dist, NoiseLevel level, std::span<const double> x);
double posterior_variance_trace(const Mixture& dist, const DiffusionSpec& spec, std::span<const double> x,
                                double t);

/// Trace of the Hessian of log p_t at x, in closed form.
double log_density_hessian_trace(const Mixture& dist, NoiseLevel level, std::span<const double> x);

/// tr Var[x0 | x_t] by second-order Tweedie: sigma^2 (D + s^2 sigma^2 tr H[log p_t](x)).
double posterior_variance_trace_tweedie(const Mixture& dist, NoiseLevel level, std::span<const double> x);

/// log p_t(x). For a point mixture at sigma == 0 returns -inf off the support
/// (+inf on a support point).
double marginal_logpdf(const Mixture& dist, NoiseLevel level, std::span<const double> x);
double marginal_logpdf(const Mixture& dist, const DiffusionSpec& spec, std::span<const double> x, double t);

/// n i.i.d. draws; row i comes from stream (seed, i) so the result is
/// independent of evaluation order.
Samples sample_data(const Mixture& dist, std::size_t n, std::uint64_t seed);

/// `count` i.i.d. standard-normal draws, shifted and scaled to sample mean 0
/// and (population) standard deviation 1, returned in ascending order.
std::vector<double> standardized_locations(std::size_t count, std::uint64_t seed);

}  // namespace entropic
