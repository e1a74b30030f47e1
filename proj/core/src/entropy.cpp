#include "entropic/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "residuals.hpp"

namespace entropic {

Denoiser exact_denoiser(const Mixture& dist) {
  return [dist](std::span<const double> x, NoiseLevel level, std::span<double> out) { denoise(dist, level, x, out); };
}

ScoreFn exact_score(const Mixture& dist) {
  return [dist](std::span<const double> x, NoiseLevel level, std::span<double> out) {
    marginal_score(dist, level, x, out);
  };
}

DataSampler mixture_sampler(const Mixture& dist) {
  return [dist](Rng& rng, std::span<double> out) { dist.sample_into(rng, out); };
}

// ---------------------------------------------------------------------------

void ErrorTable::validate(const DiffusionSpec* spec) const {
  if (times.empty()) throw std::invalid_argument("error table: no rows");
  if (eps2.size() != times.size()) throw std::invalid_argument("error table: times and values differ in length");
  if (!std_errors.empty() && std_errors.size() != times.size()) {
    throw std::invalid_argument("error table: std_errors length mismatch");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    const std::string row = " (row " + std::to_string(i) + ")";
    if (!std::isfinite(times[i])) throw std::invalid_argument("error table: non-finite time" + row);
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw std::invalid_argument("error table: times must be strictly increasing" + row);
    }
    if (spec && !spec->contains(times[i])) throw std::invalid_argument("error table: time outside process domain" + row);
    if (!std::isfinite(eps2[i]) || eps2[i] < 0.0) {
      throw std::invalid_argument("error table: eps2 must be finite and non-negative" + row);
    }
  }
  if (basis_count == 0) {
    if (!per_basis.empty()) throw std::invalid_argument("error table: basis values without basis_count");
    return;
  }
  if (per_basis.size() != times.size() * basis_count) {
    throw std::invalid_argument("error table: per-basis matrix has wrong size");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto row = basis_row(i);
    for (double v : row) {
      if (!std::isfinite(v) || v < 0.0) {
        throw std::invalid_argument("error table: per-basis values must be finite and non-negative (row " +
                                    std::to_string(i) + ")");
      }
    }
    const double sum = pairwise_sum(row);
    if (std::abs(sum - eps2[i]) > 1e-6 * std::max(std::abs(eps2[i]), 1e-300)) {
      throw std::invalid_argument("error table: per-basis row " + std::to_string(i) + " sums to " +
                                  std::to_string(sum) + ", total is " + std::to_string(eps2[i]));
    }
  }
}

ErrorTable estimate_error_table(const Denoiser& denoiser, const DiffusionSpec& spec, const DataSampler& sampler,
                                std::size_t dim, std::span<const double> grid, std::size_t samples,
                                std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("estimate_error_table: need at least one sample per time");
  if (dim == 0) throw std::invalid_argument("estimate_error_table: dimension must be positive");
  detail::require_grid(spec, grid, "estimate_error_table");

  ErrorTable table;
  table.times.assign(grid.begin(), grid.end());
  table.eps2.resize(grid.size());
  table.std_errors.resize(grid.size());
  table.provenance = {"mc", samples, seed};

  parallel_for(grid.size(), [&](std::size_t i) {
    auto rng = make_stream(seed, i, stream_domain::estimation);
    std::vector<double> err;
    err.reserve(samples);
    detail::draw_residuals(denoiser, spec.level(grid[i]), sampler, dim, samples, rng,
                           [&](std::span<const double> r) {
                             double acc = 0.0;
                             for (double v : r) acc += v * v;
                             err.push_back(acc);
                           });
    const auto est = mean_and_stderr(err);
    table.eps2[i] = est.mean;
    table.std_errors[i] = est.std_error;
  });
  return table;
}

namespace {

// tr Var[x0 | x_t] for a 1-D mixture, with caller-owned buffers.
class PosteriorVariance1d {
 public:
  PosteriorVariance1d(const Mixture& dist, NoiseLevel level)
      : dist_(dist), level_(level), logits_(dist.components()), m_(dist.components()), v_(dist.components()) {}

  double operator()(double x) {
    const std::size_t K = dist_.components();
    const double s = level_.scale, sig2 = level_.sigma * level_.sigma;
    for (std::size_t k = 0; k < K; ++k) {
      const double mu = dist_.mean(k)[0], c2 = dist_.variance(k)[0];
      const double var = s * s * (sig2 + c2);
      const double r = x - s * mu;
      logits_[k] = dist_.log_weight(k) - 0.5 * r * r / var - 0.5 * std::log(var);
      m_[k] = c2 == 0.0 ? mu : (mu * sig2 + c2 * x / s) / (sig2 + c2);
      v_[k] = c2 * sig2 / (sig2 + c2);
    }
    softmax(logits_);
    double mean = 0.0;
    for (std::size_t k = 0; k < K; ++k) mean += logits_[k] * m_[k];
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double d = m_[k] - mean;
      total += logits_[k] * (v_[k] + d * d);
    }
    return total;
  }

 private:
  const Mixture& dist_;
  NoiseLevel level_;
  std::vector<double> logits_, m_, v_;
};

double quadrature_eps2(const Mixture& dist, NoiseLevel level, std::size_t panels) {
  using Rule = boost::math::quadrature::gauss<double, 15>;
  constexpr double kWidth = 12.0;
  PosteriorVariance1d trace(dist, level);
  const double s = level.scale, sig2 = level.sigma * level.sigma;
  double total = 0.0;
  for (std::size_t k = 0; k < dist.components(); ++k) {
    const double center = s * dist.mean(k)[0];
    const double sd = s * std::sqrt(sig2 + dist.variance(k)[0]);
    const double lo = center - kWidth * sd;
    const double step = 2.0 * kWidth * sd / static_cast<double>(panels);
    const double norm = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi));
    auto f = [&](double x) {
      const double z = (x - center) / sd;
      return norm * std::exp(-0.5 * z * z) * trace(x);
    };
    double acc = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
      const double a = lo + step * static_cast<double>(p);
      acc += Rule::integrate(f, a, a + step);
    }
    total += dist.weight(k) * acc;
  }
  return total;
}

}  // namespace

ErrorTable exact_error_table(const Mixture& dist, const DiffusionSpec& spec, std::span<const double> grid,
                             const ExactTableOptions& options) {
  detail::require_grid(spec, grid, "exact_error_table");
  if (options.quadrature_panels == 0) throw std::invalid_argument("exact_error_table: need at least one panel");

  if (dist.components() > 1 && dist.dim() > 1) {
    auto table = estimate_error_table(exact_denoiser(dist), spec, mixture_sampler(dist), dist.dim(), grid,
                                      options.fallback_samples, options.fallback_seed);
    table.provenance.method = "mc-fallback";
    table.notes.push_back("quadrature supports one dimension only; eps2 estimated by Monte-Carlo with the exact "
                          "denoiser (" + std::to_string(options.fallback_samples) + " samples per time)");
    return table;
  }

  ErrorTable table;
  table.times.assign(grid.begin(), grid.end());
  table.eps2.resize(grid.size());
  if (dist.components() == 1) {
    // The posterior variance of a single component does not depend on x_t.
    table.provenance = {"exact", 0, 0};
    const auto mu = dist.mean(0);
    std::vector<double> x(mu.begin(), mu.end());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto level = spec.level(grid[i]);
      for (std::size_t d = 0; d < x.size(); ++d) x[d] = level.scale * mu[d];
      table.eps2[i] = dist.kind() == MixtureKind::point ? 0.0 : posterior_variance_trace(dist, level, x);
    }
    return table;
  }

  table.provenance = {"quadrature", options.quadrature_panels, 0};
  parallel_for(grid.size(), [&](std::size_t i) {
    table.eps2[i] = quadrature_eps2(dist, spec.level(grid[i]), options.quadrature_panels);
  });
  return table;
}

std::vector<double> entropy_rate(const DiffusionSpec& spec, const ErrorTable& table) {
  std::vector<double> out(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double t = table.times[i];
    const double sigma = spec.noise(t);
    if (!(sigma > 0.0)) throw std::domain_error("entropy_rate: sigma vanishes at t = " + std::to_string(t));
    out[i] = spec.noise_rate(t) / (sigma * sigma * sigma) * table.eps2[i];
  }
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(CurveKind kind) {
  switch (kind) {
    case CurveKind::entropic: return "entropic";
    case CurveKind::rescaled: return "rescaled";
    case CurveKind::spectral_rescaled: return "spectral_rescaled";
  }
  return "?";
}

CurveKind curve_kind_from_string(const std::string& s) {
  if (s == "entropic") return CurveKind::entropic;
  if (s == "rescaled") return CurveKind::rescaled;
  if (s == "spectral_rescaled") return CurveKind::spectral_rescaled;
  throw std::invalid_argument("unknown curve kind '" + s + "'");
}

const char* to_string(IntegrationRule rule) {
  return rule == IntegrationRule::left_riemann ? "left_riemann" : "trapezoid";
}

IntegrationRule integration_rule_from_string(const std::string& s) {
  if (s == "left_riemann" || s == "left") return IntegrationRule::left_riemann;
  if (s == "trapezoid") return IntegrationRule::trapezoid;
  throw std::invalid_argument("unknown integration rule '" + s + "'");
}

EntropyCurve::EntropyCurve(std::vector<double> times, std::vector<double> values, CurveKind kind)
    : times_(std::move(times)), values_(std::move(values)), kind_(kind) {
  if (times_.size() < 2) throw std::invalid_argument("entropy curve: need at least two nodes");
  if (times_.size() != values_.size()) throw std::invalid_argument("entropy curve: times and values differ in length");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) || !std::isfinite(values_[i])) {
      throw std::invalid_argument("entropy curve: non-finite node " + std::to_string(i));
    }
    if (i > 0 && !(times_[i] > times_[i - 1])) {
      throw std::invalid_argument("entropy curve: times must be strictly increasing (node " + std::to_string(i) + ")");
    }
    if (i > 0 && values_[i] < values_[i - 1]) {
      throw std::invalid_argument("entropy curve: values decrease at node " + std::to_string(i));
    }
  }
}

double EntropyCurve::operator()(double t) const {
  const double slack = 1e-12 * (t_max() - t_min());
  if (!(t >= t_min() - slack && t <= t_max() + slack)) {
    throw std::domain_error("entropy curve: t = " + std::to_string(t) + " outside support");
  }
  return interp_linear(times_, values_, t);
}

double EntropyCurve::inverse(double level) const {
  const double lo = values_.front(), hi = values_.back();
  const double slack = 1e-12 * std::max(hi - lo, std::abs(hi));
  if (!(level >= lo - slack && level <= hi + slack)) {
    throw std::domain_error("entropy curve: level " + std::to_string(level) + " outside curve range");
  }
  return interp_inverse(times_, values_, std::clamp(level, lo, hi));
}

bool EntropyCurve::strictly_increasing() const {
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (!(values_[i] > values_[i - 1])) return false;
  }
  return true;
}

bool EntropyCurve::flat_at(double level) const {
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (values_[i] == values_[i - 1] && values_[i] == level) return true;
  }
  return false;
}

namespace {

// Cumulative integral of `integrand` over `times`, starting at zero.
std::vector<double> cumulative(std::span<const double> times, std::span<const double> integrand,
                               IntegrationRule rule) {
  std::vector<double> out(times.size(), 0.0);
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double dt = times[i + 1] - times[i];
    const double inc = rule == IntegrationRule::left_riemann ? integrand[i] * dt
                                                              : 0.5 * (integrand[i] + integrand[i + 1]) * dt;
    out[i + 1] = out[i] + inc;
  }
  return out;
}

std::vector<double> rate_integrand(const DiffusionSpec& spec, std::span<const double> times,
                                   std::span<const double> eps2, bool rescaled) {
  std::vector<double> f(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double sigma = spec.noise(times[i]);
    const double w = rescaled ? sigma : 1.0;
    f[i] = w * spec.noise_rate(times[i]) / (sigma * sigma * sigma) * eps2[i];
  }
  return f;
}

}  // namespace

EntropyCurve integrate_entropy(const DiffusionSpec& spec, const ErrorTable& table, CurveKind kind,
                               IntegrationRule rule) {
  if (kind == CurveKind::spectral_rescaled) {
    throw std::invalid_argument("integrate_entropy: use spectral_rescaled_entropy for spectral curves");
  }
  table.validate(&spec);
  if (table.size() < 2) throw std::invalid_argument("integrate_entropy: need at least two grid times");

  std::size_t zero_prefix = 0;
  while (zero_prefix < table.size() && table.eps2[zero_prefix] == 0.0) ++zero_prefix;
  if (zero_prefix == table.size()) {
    throw std::invalid_argument("integrate_entropy: error table is identically zero; the curve is degenerate");
  }

  const auto f = rate_integrand(spec, table.times, table.eps2, kind == CurveKind::rescaled);
  EntropyCurve curve(table.times, cumulative(table.times, f, rule), kind);
  const std::size_t flat = rule == IntegrationRule::left_riemann ? zero_prefix : (zero_prefix > 0 ? zero_prefix - 1 : 0);
  if (flat > 0) {
    curve.warnings.push_back("eps2 is zero up to t = " + std::to_string(table.times[zero_prefix - 1]) +
                             "; the curve is flat on [" + std::to_string(table.times[0]) + ", " +
                             std::to_string(table.times[flat]) + "]");
  }
  return curve;
}

double gaussian_rescaled_entropy(double c, std::size_t dim, double t) {
  if (!(c > 0.0)) throw std::invalid_argument("gaussian_rescaled_entropy: c must be positive");
  return static_cast<double>(dim) * c * std::atan(t / c);
}

double integrated_conditional_entropy(const DiffusionSpec& spec, const ErrorTable& table, IntegrationRule rule) {
  table.validate(&spec);
  // SNR = 1 / (2 sigma^2), so -dSNR/dt = sigma' / sigma^3.
  std::vector<double> f(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double t = table.times[i];
    const double sigma = spec.noise(t);
    const double snr_rate = -spec.noise_rate(t) / (sigma * sigma * sigma);
    f[i] = -snr_rate * table.eps2[i];
  }
  return cumulative(table.times, f, rule).back();
}

// ---------------------------------------------------------------------------

Estimate entropy_production_rate(const Mixture& dist, NoiseLevel level, DriftDiffusion coeffs, std::size_t samples,
                                 std::uint64_t seed) {
  const double D = static_cast<double>(dist.dim());
  const double divergence = D * coeffs.drift_coeff;
  const double half_g2 = 0.5 * coeffs.diffusion * coeffs.diffusion;
  if (half_g2 == 0.0) return {divergence, 0.0};
  if (samples == 0) throw std::invalid_argument("entropy_production_rate: need at least one sample");

  auto rng = make_stream(seed, 0, stream_domain::estimation);
  std::normal_distribution<double> normal;
  std::vector<double> x0(dist.dim()), x(dist.dim()), score(dist.dim()), terms(samples);
  for (std::size_t j = 0; j < samples; ++j) {
    dist.sample_into(rng, x0);
    for (std::size_t d = 0; d < x.size(); ++d) x[d] = level.scale * (x0[d] + level.sigma * normal(rng));
    marginal_score(dist, level, x, score);
    double acc = 0.0;
    for (double v : score) acc += v * v;
    terms[j] = acc;
  }
  const auto est = mean_and_stderr(terms);
  return {divergence + half_g2 * est.mean, half_g2 * est.std_error};
}

Estimate entropy_production_rate(const Mixture& dist, const DiffusionSpec& spec, double t, std::size_t samples,
                                 std::uint64_t seed) {
  return entropy_production_rate(dist, spec.level(t), drift_diffusion(spec, t), samples, seed);
}

Estimate conditional_rate_from_scores(const Mixture& dist, const DiffusionSpec& spec, double t, std::size_t samples,
                                      std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("conditional_rate_from_scores: need at least one sample");
  const auto level = spec.level(t);
  const auto coeffs = drift_diffusion(spec, t);
  const double half_g2 = 0.5 * coeffs.diffusion * coeffs.diffusion;
  const double kernel_std = level.scale * level.sigma;

  auto rng = make_stream(seed, 0, stream_domain::estimation);
  std::normal_distribution<double> normal;
  const std::size_t D = dist.dim();
  std::vector<double> x0(D), nu(D), x(D), score(D), terms(samples);
  for (std::size_t j = 0; j < samples; ++j) {
    dist.sample_into(rng, x0);
    double cond = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      nu[d] = normal(rng);
      x[d] = level.scale * x0[d] + kernel_std * nu[d];
      cond += nu[d] * nu[d];
    }
    // grad log p(x_t | x0) = -nu / (s sigma)
    cond /= kernel_std * kernel_std;
    marginal_score(dist, level, x, score);
    double marg = 0.0;
    for (double v : score) marg += v * v;
    terms[j] = half_g2 * (cond - marg);
  }
  const auto est = mean_and_stderr(terms);
  return {est.mean, est.std_error};
}

DsmGap dsm_gap(const ScoreFn& score, const Mixture& dist, const DiffusionSpec& spec, std::span<const double> times,
               std::span<const double> weights, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("dsm_gap: need at least one sample per time");
  if (times.size() != weights.size() || times.empty()) {
    throw std::invalid_argument("dsm_gap: times and weights must be non-empty and of equal length");
  }
  double weight_sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("dsm_gap: weights must be non-negative");
    weight_sum += w;
  }
  if (!(weight_sum > 0.0)) throw std::invalid_argument("dsm_gap: weights sum to zero");
  for (double t : times) {
    if (!spec.contains(t)) throw std::domain_error("dsm_gap: time outside process domain");
  }

  const std::size_t n = times.size(), D = dist.dim();
  std::vector<MeanEstimate> dsm(n), sm(n), gap(n);
  parallel_for(n, [&](std::size_t i) {
    const auto level = spec.level(times[i]);
    const double kernel_std = level.scale * level.sigma;
    auto rng = make_stream(seed, i, stream_domain::estimation);
    std::normal_distribution<double> normal;
    std::vector<double> x0(D), nu(D), x(D), model(D), truth(D);
    std::vector<double> a(samples), b(samples), c(samples);
    for (std::size_t j = 0; j < samples; ++j) {
      dist.sample_into(rng, x0);
      for (std::size_t d = 0; d < D; ++d) {
        nu[d] = normal(rng);
        x[d] = level.scale * x0[d] + kernel_std * nu[d];
      }
      score(x, level, model);
      marginal_score(dist, level, x, truth);
      double l_dsm = 0.0, l_sm = 0.0;
      for (std::size_t d = 0; d < D; ++d) {
        const double cond = -nu[d] / kernel_std;
        l_dsm += (model[d] - cond) * (model[d] - cond);
        l_sm += (model[d] - truth[d]) * (model[d] - truth[d]);
      }
      a[j] = l_dsm;
      b[j] = l_sm;
      c[j] = l_dsm - l_sm;
    }
    dsm[i] = mean_and_stderr(a);
    sm[i] = mean_and_stderr(b);
    gap[i] = mean_and_stderr(c);
  });

  const auto exact = exact_error_table(dist, spec, times);
  DsmGap out;
  double var_dsm = 0.0, var_sm = 0.0, var_gap = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lam = weights[i] / weight_sum;
    out.l_dsm.value += lam * dsm[i].mean;
    out.l_sm.value += lam * sm[i].mean;
    out.gap.value += lam * gap[i].mean;
    var_dsm += lam * lam * dsm[i].std_error * dsm[i].std_error;
    var_sm += lam * lam * sm[i].std_error * sm[i].std_error;
    var_gap += lam * lam * gap[i].std_error * gap[i].std_error;
    // (2 / g^2) dH/dt = eps2 / (s^2 sigma^4)
    const auto level = spec.level(times[i]);
    const double s2 = level.scale * level.scale, sig2 = level.sigma * level.sigma;
    out.entropy_term += lam * exact.eps2[i] / (s2 * sig2 * sig2);
  }
  out.l_dsm.std_error = std::sqrt(var_dsm);
  out.l_sm.std_error = std::sqrt(var_sm);
  out.gap.std_error = std::sqrt(var_gap);
  return out;
}

InformationTransfer information_transfer(const Mixture& dist, const DiffusionSpec& spec, std::span<const double> grid,
                                         std::size_t samples, std::uint64_t seed) {
  if (dist.kind() != MixtureKind::point) {
    throw std::invalid_argument("information_transfer: only defined for point mixtures (finite prior entropy)");
  }
  if (samples == 0) throw std::invalid_argument("information_transfer: need at least one sample");
  detail::require_grid(spec, grid, "information_transfer");

  InformationTransfer out;
  out.times.assign(grid.begin(), grid.end());
  out.values.resize(grid.size());
  out.std_errors.resize(grid.size());
  out.prior_entropy = dist.prior_entropy();

  const std::size_t D = dist.dim();
  parallel_for(grid.size(), [&](std::size_t i) {
    const auto level = spec.level(grid[i]);
    auto rng = make_stream(seed, 0, stream_domain::estimation);
    std::normal_distribution<double> normal;
    std::vector<double> x0(D), x(D), h(samples);
    for (std::size_t j = 0; j < samples; ++j) {
      dist.sample_into(rng, x0);
      for (std::size_t d = 0; d < D; ++d) x[d] = level.scale * (x0[d] + level.sigma * normal(rng));
      const auto post = posterior(dist, level, x);
      double entropy = 0.0;
      for (double r : post.responsibilities) {
        if (r > 0.0) entropy -= r * std::log(r);
      }
      h[j] = entropy;
    }
    const auto est = mean_and_stderr(h);
    out.values[i] = out.prior_entropy - est.mean;
    out.std_errors[i] = est.std_error;
  });
  return out;
}

}  // namespace entropic
