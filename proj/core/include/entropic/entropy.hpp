#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "entropic/analytic.hpp"
#include "entropic/numeric.hpp"
#include "entropic/process.hpp"

namespace entropic {

/// x_hat0 = D(x_t; sigma, s). Must be safe to call concurrently.
using Denoiser = std::function<void(std::span<const double> x, NoiseLevel level, std::span<double> out)>;
/// Approximation of grad log p_t(x). Must be safe to call concurrently.
using ScoreFn = std::function<void(std::span<const double> x, NoiseLevel level, std::span<double> out)>;
/// Draws one data point x0 ~ p0 into `out`.
using DataSampler = std::function<void(Rng& rng, std::span<double> out)>;

Denoiser exact_denoiser(const Mixture& dist);
ScoreFn exact_score(const Mixture& dist);
DataSampler mixture_sampler(const Mixture& dist);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Squared denoising error eps^2(t) on an ascending time grid, optionally
/// split over an orthonormal basis (`per_basis` is times x basis_count).
struct ErrorTable {
  struct Provenance {
    std::string method = "exact";  // exact | quadrature | mc | mc-fallback | imported
    std::size_t samples = 0;
    std::uint64_t seed = 0;
  };

  std::vector<double> times;
  std::vector<double> eps2;
  std::vector<double> std_errors;  // empty unless Monte-Carlo
  std::size_t basis_count = 0;
  std::vector<double> per_basis;
  Provenance provenance;
  std::vector<std::string> notes;

  std::size_t size() const noexcept { return times.size(); }
  bool spectral() const noexcept { return basis_count > 0; }
  std::span<const double> basis_row(std::size_t i) const { return {per_basis.data() + i * basis_count, basis_count}; }

  /// Throws std::invalid_argument when an invariant is broken: times not
  /// strictly increasing (or outside `spec`, if given), negative or
  /// non-finite values, or basis rows not summing to the total (1e-6 rel).
  void validate(const DiffusionSpec* spec = nullptr) const;
};

/// Monte-Carlo eps^2 on `grid`: x_t = s x0 + s sigma nu, M draws per time,
/// grid index i uses stream (seed, i).
ErrorTable estimate_error_table(const Denoiser& denoiser, const DiffusionSpec& spec, const DataSampler& sampler,
                                std::size_t dim, std::span<const double> grid, std::size_t samples,
                                std::uint64_t seed);

struct ExactTableOptions {
  std::size_t quadrature_panels = 256;  // Gauss-Legendre panels per component (1-D)
  std::size_t fallback_samples = 4096;  // Monte-Carlo draws per time when D > 1
  std::uint64_t fallback_seed = 0;
};

/// eps^2(t) = E_{p_t}[tr Var(x0 | x_t)] for an analytic mixture. Closed form
/// for a single component, composite Gauss-Legendre quadrature in 1-D, and a
/// Monte-Carlo fallback (flagged in provenance and notes) otherwise.
ErrorTable exact_error_table(const Mixture& dist, const DiffusionSpec& spec, std::span<const double> grid,
                             const ExactTableOptions& options = {});

/// Conditional entropy rate d/dt H[x0 | x_t] = sigma' / sigma^3 * eps^2.
std::vector<double> entropy_rate(const DiffusionSpec& spec, const ErrorTable& table);

enum class CurveKind { entropic, rescaled, spectral_rescaled };
enum class IntegrationRule { left_riemann, trapezoid };

const char* to_string(CurveKind kind);
CurveKind curve_kind_from_string(const std::string& s);
const char* to_string(IntegrationRule rule);
IntegrationRule integration_rule_from_string(const std::string& s);

/// Monotone map t -> phi(t), piecewise linear between nodes.
class EntropyCurve {
 public:
  EntropyCurve(std::vector<double> times, std::vector<double> values, CurveKind kind);

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<double>& values() const noexcept { return values_; }
  CurveKind kind() const noexcept { return kind_; }

  double t_min() const { return times_.front(); }
  double t_max() const { return times_.back(); }

  /// phi(t); throws std::domain_error outside [t_min, t_max].
  double operator()(double t) const;
  /// Smallest t with phi(t) == level; throws std::domain_error outside the range.
  double inverse(double level) const;

  bool strictly_increasing() const;
  /// True when `level` is attained on a whole interval, i.e. the inverse is ambiguous.
  bool flat_at(double level) const;

  std::vector<std::string> warnings;

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  CurveKind kind_;
};

/// Integrates the entropy rate over the table: weight 1 gives the entropic
/// time H[x0|x_t] (anchored at 0), weight sigma gives the rescaled entropic
/// time. `left_riemann` is the plain cumulative Riemann sum, `trapezoid` the
/// second-order rule.
EntropyCurve integrate_entropy(const DiffusionSpec& spec, const ErrorTable& table, CurveKind kind,
                               IntegrationRule rule = IntegrationRule::trapezoid);

/// Rescaled entropy of N(0, c^2 I_D) under the VE process: D c arctan(t / c).
double gaussian_rescaled_entropy(double c, std::size_t dim, double t);

/// -int SNR'(t) eps^2 dt with SNR = 1/(2 sigma^2), using the same rule as integrate_entropy.
double integrated_conditional_entropy(const DiffusionSpec& spec, const ErrorTable& table,
                                      IntegrationRule rule = IntegrationRule::trapezoid);

// --- spectral decomposition ------------------------------------------------

struct ArrayShape {
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t size() const noexcept { return height * width; }
};

enum class SpectralBasis { fourier, pixel };

/// Power |X_f|^2 of the unitary 2-D DFT of a height x width array, row-major
/// over (u, v). Unitary scaling makes the powers sum to ||x||^2.
class UnitaryDft2d {
 public:
  explicit UnitaryDft2d(ArrayShape shape);
  void power(std::span<const double> x, std::span<double> out) const;
  ArrayShape shape() const noexcept { return shape_; }

 private:
  ArrayShape shape_;
  std::vector<double> cos_h_, sin_h_, cos_w_, sin_w_;
};

/// Same draws as estimate_error_table (same seed gives the same residuals),
/// with each residual x_hat0 - x0 also decomposed over `basis`.
ErrorTable spectral_error_table(const Denoiser& denoiser, const DiffusionSpec& spec, const DataSampler& sampler,
                                ArrayShape shape, std::span<const double> grid, std::size_t samples,
                                std::uint64_t seed, SpectralBasis basis = SpectralBasis::fourier);

/// Mean power per basis direction of the data itself; the default amplitudes
/// for spectral_rescaled_entropy.
std::vector<double> spectral_amplitudes(const DataSampler& sampler, ArrayShape shape, std::size_t samples,
                                        std::uint64_t seed, SpectralBasis basis = SpectralBasis::fourier);

struct SpectralCurves {
  EntropyCurve combined;
  std::vector<EntropyCurve> per_basis;  // normalized to 1 at the last time; all zero for excluded directions
  std::vector<std::size_t> excluded;    // directions with identically zero error
};

/// Rescaled entropy per basis direction, each normalized to 1 at the final
/// time, then averaged with weights `amplitudes` (normalized to sum to 1).
SpectralCurves spectral_rescaled_entropy(const ErrorTable& table, const DiffusionSpec& spec,
                                         std::span<const double> amplitudes,
                                         IntegrationRule rule = IntegrationRule::trapezoid);

enum class RadialBinning { integer_ring, annulus };

/// Radial bin of every DFT index (u, v) using signed frequencies.
/// integer_ring rounds the radius; annulus uses floor(radius / width).
std::vector<std::size_t> radial_bins(ArrayShape shape, RadialBinning binning, double annulus_width = 1.0);

/// Averages per-basis curves over radial bins: result[bin][time]. Bins with no
/// included direction are filled with NaN.
std::vector<std::vector<double>> radial_profile(const SpectralCurves& curves, ArrayShape shape,
                                                RadialBinning binning, double annulus_width = 1.0);

// --- diagnostics -----------------------------------------------------------

/// d/dt H[x_t] = E[div f] + g^2/2 E||grad log p_t||^2, Monte-Carlo over x_t.
Estimate entropy_production_rate(const Mixture& dist, const DiffusionSpec& spec, double t, std::size_t samples,
                                 std::uint64_t seed);
/// Same, with drift and diffusion given directly at a noise level.
Estimate entropy_production_rate(const Mixture& dist, NoiseLevel level, DriftDiffusion coeffs,
                                 std::size_t samples, std::uint64_t seed);

/// g^2/2 (E||grad log p(x_t|x0)||^2 - E||grad log p_t(x_t)||^2), paired per draw.
Estimate conditional_rate_from_scores(const Mixture& dist, const DiffusionSpec& spec, double t,
                                      std::size_t samples, std::uint64_t seed);

struct DsmGap {
  Estimate l_dsm;
  Estimate l_sm;
  Estimate gap;              // l_dsm - l_sm, paired per draw
  double entropy_term = 0.0;  // E_lambda[(2 / g^2) dH/dt] from the exact error table
};

/// Denoising and explicit score-matching losses of `score` against the true
/// score of `dist`, averaged over `times` with weights lambda (normalized).
DsmGap dsm_gap(const ScoreFn& score, const Mixture& dist, const DiffusionSpec& spec, std::span<const double> times,
               std::span<const double> weights, std::size_t samples, std::uint64_t seed);

struct InformationTransfer {
  std::vector<double> times;
  std::vector<double> values;  // H[x0] - H[x0 | x_t]
  std::vector<double> std_errors;
  double prior_entropy = 0.0;
};

/// Information transfer for a point mixture from the Monte-Carlo mean of the
/// posterior Shannon entropy. All times share one set of draws (common random
/// numbers), so differences across times are smooth. Throws
/// std::invalid_argument for continuous mixtures.
InformationTransfer information_transfer(const Mixture& dist, const DiffusionSpec& spec,
                                         std::span<const double> grid, std::size_t samples, std::uint64_t seed);

}  // namespace entropic
