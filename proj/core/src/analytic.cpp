#include "entropic/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace entropic {

namespace {

constexpr double kWeightTolerance = 1e-12;

void require_finite(std::span<const double> x, const char* what) {
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite input");
  }
}

void require_level(const Mixture& dist, NoiseLevel level, const char* what) {
  if (!(level.scale > 0.0) || !std::isfinite(level.scale)) {
    throw std::invalid_argument(std::string(what) + ": scale must be positive");
  }
  if (!(level.sigma >= 0.0) || !std::isfinite(level.sigma)) {
    throw std::invalid_argument(std::string(what) + ": sigma must be non-negative");
  }
  if (level.sigma == 0.0 && dist.kind() == MixtureKind::point) {
    throw std::domain_error(std::string(what) + ": point mixture at sigma = 0 is degenerate; use t >= t_min");
  }
}

void require_dim(const Mixture& dist, std::span<const double> x, const char* what) {
  if (x.size() != dist.dim()) {
    throw std::invalid_argument(std::string(what) + ": input has dimension " + std::to_string(x.size()) +
                                ", mixture has " + std::to_string(dist.dim()));
  }
}

// Scratch reused across calls on the same thread; samplers call the
// denoiser millions of times and per-call allocation dominates otherwise.
std::vector<double>& scratch(std::size_t n) {
  thread_local std::vector<double> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

// Log-likelihood of x under each component of the noised mixture, written into `logits`.
// The Gaussian normalizer is optional because it is common to all
// components of a point mixture and cancels in the responsibilities.
void component_log_likelihoods(const Mixture& dist, NoiseLevel level, std::span<const double> x,
                               std::span<double> logits, bool normalized = true) {
  const double s = level.scale;
  const double s2 = s * s;
  const double sig2 = level.sigma * level.sigma;
  const std::size_t D = dist.dim();
  for (std::size_t k = 0; k < dist.components(); ++k) {
    const auto mu = dist.mean(k);
    const auto c2 = dist.variance(k);
    double acc = dist.log_weight(k);
    for (std::size_t d = 0; d < D; ++d) {
      const double v = s2 * (sig2 + c2[d]);
      const double r = x[d] - s * mu[d];
      acc -= 0.5 * r * r / v;
      if (normalized) acc -= 0.5 * std::log(2.0 * std::numbers::pi * v);
    }
    logits[k] = acc;
  }
}

void responsibilities_into(const Mixture& dist, NoiseLevel level, std::span<const double> x, std::span<double> r) {
  component_log_likelihoods(dist, level, x, r, dist.kind() == MixtureKind::gaussian);
  softmax(r);
}

}  // namespace

// ---------------------------------------------------------------------------

void Mixture::finish() {
  const std::size_t K = weights_.size();
  if (K == 0) throw std::invalid_argument("Mixture: at least one component is required");
  if (dim_ == 0) throw std::invalid_argument("Mixture: dimension must be at least 1");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("Mixture: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightTolerance) {
    throw std::invalid_argument("Mixture: weights must sum to 1 (got " + std::to_string(total) + ")");
  }
  for (double m : means_) {
    if (!std::isfinite(m)) throw std::invalid_argument("Mixture: means must be finite");
  }
  log_weights_.resize(K);
  cumulative_.resize(K);
  double run = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    log_weights_[k] = std::log(weights_[k]);
    run += weights_[k];
    cumulative_[k] = run;
  }
  cumulative_.back() = std::numeric_limits<double>::infinity();
}

Mixture Mixture::gaussian(std::vector<double> weights, std::vector<std::vector<double>> means,
                          std::vector<std::vector<double>> variances) {
  if (means.size() != weights.size() || variances.size() != weights.size()) {
    throw std::invalid_argument("Mixture::gaussian: weights, means and variances must have equal length");
  }
  Mixture m;
  m.kind_ = MixtureKind::gaussian;
  m.weights_ = std::move(weights);
  m.dim_ = means.empty() ? 0 : means.front().size();
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (means[k].size() != m.dim_ || variances[k].size() != m.dim_) {
      throw std::invalid_argument("Mixture::gaussian: component " + std::to_string(k) + " has the wrong dimension");
    }
    for (double v : variances[k]) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument("Mixture::gaussian: variances must be positive (use a point mixture for 0)");
      }
    }
    m.means_.insert(m.means_.end(), means[k].begin(), means[k].end());
    m.variances_.insert(m.variances_.end(), variances[k].begin(), variances[k].end());
  }
  m.finish();
  return m;
}

Mixture Mixture::points(std::vector<double> weights, std::vector<std::vector<double>> points) {
  if (points.size() != weights.size()) {
    throw std::invalid_argument("Mixture::points: weights and points must have equal length");
  }
  Mixture m;
  m.kind_ = MixtureKind::point;
  m.weights_ = std::move(weights);
  m.dim_ = points.empty() ? 0 : points.front().size();
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (points[k].size() != m.dim_) {
      throw std::invalid_argument("Mixture::points: point " + std::to_string(k) + " has the wrong dimension");
    }
    m.means_.insert(m.means_.end(), points[k].begin(), points[k].end());
  }
  m.variances_.assign(m.means_.size(), 0.0);
  m.finish();
  for (std::size_t i = 0; i < m.components(); ++i) {
    for (std::size_t j = i + 1; j < m.components(); ++j) {
      if (std::equal(m.mean(i).begin(), m.mean(i).end(), m.mean(j).begin())) {
        throw std::invalid_argument("Mixture::points: points " + std::to_string(i) + " and " + std::to_string(j) +
                                    " coincide");
      }
    }
  }
  return m;
}

Mixture Mixture::isotropic_gaussian(double c, std::size_t dim, double mean) {
  return gaussian({1.0}, {std::vector<double>(dim, mean)}, {std::vector<double>(dim, c * c)});
}

double Mixture::prior_entropy() const {
  double h = 0.0;
  for (double w : weights_) h -= w * std::log(w);
  return h;
}

double Mixture::min_separation() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < components(); ++i) {
    for (std::size_t j = i + 1; j < components(); ++j) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) {
        const double r = mean(i)[d] - mean(j)[d];
        d2 += r * r;
      }
      best = std::min(best, std::sqrt(d2));
    }
  }
  return best;
}

void Mixture::sample_into(Rng& rng, std::span<double> out) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  const auto k = static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) -
                                          cumulative_.begin());
  const auto mu = mean(k);
  const auto c2 = variance(k);
  if (kind_ == MixtureKind::point) {
    std::copy(mu.begin(), mu.end(), out.begin());
    return;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t d = 0; d < dim_; ++d) out[d] = mu[d] + std::sqrt(c2[d]) * normal(rng);
}

// ---------------------------------------------------------------------------

Posterior posterior(const Mixture& dist, NoiseLevel level, std::span<const double> x) {
  require_dim(dist, x, "posterior");
  require_finite(x, "posterior");
  require_level(dist, level, "posterior");
  const std::size_t K = dist.components(), D = dist.dim();
  Posterior p;
  p.responsibilities.resize(K);
  responsibilities_into(dist, level, x, p.responsibilities);
  p.means.resize(K * D);
  p.variances.resize(K * D);
  const double sig2 = level.sigma * level.sigma;
  for (std::size_t k = 0; k < K; ++k) {
    const auto mu = dist.mean(k);
    const auto c2 = dist.variance(k);
    for (std::size_t d = 0; d < D; ++d) {
      if (c2[d] == 0.0) {
        p.means[k * D + d] = mu[d];
        p.variances[k * D + d] = 0.0;
      } else {
        const double denom = sig2 + c2[d];
        p.means[k * D + d] = (mu[d] * sig2 + c2[d] * x[d] / level.scale) / denom;
        p.variances[k * D + d] = c2[d] * sig2 / denom;
      }
    }
  }
  return p;
}

Posterior posterior(const Mixture& dist, const DiffusionSpec& spec, std::span<const double> x, double t) {
  return posterior(dist, spec.level(t), x);
}

void marginal_score(const Mixture& dist, NoiseLevel level, std::span<const double> x, std::span<double> out) {
  require_dim(dist, x, "marginal_score");
  require_finite(x, "marginal_score");
  require_level(dist, level, "marginal_score");
  const std::size_t K = dist.components(), D = dist.dim();
  auto& buf = scratch(K);
  std::span<double> r(buf.data(), K);
  responsibilities_into(dist, level, x, r);
  const double s = level.scale, s2 = s * s, sig2 = level.sigma * level.sigma;
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    if (r[k] == 0.0) continue;
    const auto mu = dist.mean(k);
    const auto c2 = dist.variance(k);
    for (std::size_t d = 0; d < D; ++d) out[d] += r[k] * (s * mu[d] - x[d]) / (s2 * (sig2 + c2[d]));
  }
}

std::vector<double> marginal_score(const Mixture& dist, const DiffusionSpec& spec, std::span<const double> x,
                                   double t) {
  std::vector<double> out(dist.dim());
  marginal_score(dist, spec.level(t), x, out);
  return out;
}

void denoise(const Mixture& dist, NoiseLevel level, std::span<const double> x, std::span<double> out) {
  require_dim(dist, x, "denoise");
  require_finite(x, "denoise");
  require_level(dist, level, "denoise");
  const std::size_t K = dist.components(), D = dist.dim();
  auto& buf = scratch(K);
  std::span<double> r(buf.data(), K);
  responsibilities_into(dist, level, x, r);
  const double sig2 = level.sigma * level.sigma;
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    if (r[k] == 0.0) continue;
    const auto mu = dist.mean(k);
    const auto c2 = dist.variance(k);
    for (std::size_t d = 0; d < D; ++d) {
      const double m = c2[d] == 0.0 ? mu[d] : (mu[d] * sig2 + c2[d] * x[d] / level.scale) / (sig2 + c2[d]);
      out[d] += r[k] * m;
    }
  }
}

std::vector<double> denoise(const Mixture& dist, const DiffusionSpec& spec, std::span<const double> x, double t) {
  std::vector<double> out(dist.dim());
  denoise(dist, spec.level(t), x, out);
  return out;
}

double posterior_variance_trace(const Mixture& dist, NoiseLevel level, std::span<const double> x) {
  const auto p = posterior(dist, level, x);
  const std::size_t K = dist.components(), D = dist.dim();
  std::vector<double> mean(D, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t d = 0; d < D; ++d) mean[d] += p.responsibilities[k] * p.means[k * D + d];
  }
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    double within = 0.0, between = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      within += p.variances[k * D + d];
      const double r = p.means[k * D + d] - mean[d];
      between += r * r;
    }
    total += p.responsibilities[k] * (within + between);
  }
  return total;
}

double posterior_variance_trace(const Mixture& dist, const DiffusionSpec& spec, std::span<const double> x,
                                double t) {
  return posterior_variance_trace(dist, spec.level(t), x);
}

double log_density_hessian_trace(const Mixture& dist, NoiseLevel level, std::span<const double> x) {
  require_dim(dist, x, "log_density_hessian_trace");
  require_finite(x, "log_density_hessian_trace");
  require_level(dist, level, "log_density_hessian_trace");
  // H = sum_k r_k (J_k + g_k g_k^T) - gbar gbar^T, with g_k the component
  // score and J_k = -diag(1 / v_k) its Jacobian.
  const std::size_t K = dist.components(), D = dist.dim();
  std::vector<double> r(K);
  responsibilities_into(dist, level, x, r);
  const double s = level.scale, s2 = s * s, sig2 = level.sigma * level.sigma;
  std::vector<double> gbar(D, 0.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const auto mu = dist.mean(k);
    const auto c2 = dist.variance(k);
    double jac = 0.0, gg = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      const double v = s2 * (sig2 + c2[d]);
      const double g = (s * mu[d] - x[d]) / v;
      jac -= 1.0 / v;
      gg += g * g;
      gbar[d] += r[k] * g;
    }
    acc += r[k] * (jac + gg);
  }
  for (double g : gbar) acc -= g * g;
  return acc;
}

double posterior_variance_trace_tweedie(const Mixture& dist, NoiseLevel level, std::span<const double> x) {
  const double sig2 = level.sigma * level.sigma;
  const double s2 = level.scale * level.scale;
  const double tr = log_density_hessian_trace(dist, level, x);
  return sig2 * (static_cast<double>(dist.dim()) + s2 * sig2 * tr);
}

double marginal_logpdf(const Mixture& dist, NoiseLevel level, std::span<const double> x) {
  require_dim(dist, x, "marginal_logpdf");
  require_finite(x, "marginal_logpdf");
  if (level.sigma == 0.0 && dist.kind() == MixtureKind::point) {
    for (std::size_t k = 0; k < dist.components(); ++k) {
      bool hit = true;
      for (std::size_t d = 0; d < dist.dim(); ++d) hit = hit && x[d] == level.scale * dist.mean(k)[d];
      if (hit) return std::numeric_limits<double>::infinity();
    }
    return -std::numeric_limits<double>::infinity();
  }
  require_level(dist, level, "marginal_logpdf");
  std::vector<double> logits(dist.components());
  component_log_likelihoods(dist, level, x, logits);
  return log_sum_exp(logits);
}

double marginal_logpdf(const Mixture& dist, const DiffusionSpec& spec, std::span<const double> x, double t) {
  return marginal_logpdf(dist, spec.level(t), x);
}

Samples sample_data(const Mixture& dist, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_data: n must be at least 1");
  Samples out(n, dist.dim());
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = make_stream(seed, i, stream_domain::data);
    dist.sample_into(rng, out.row(i));
  }
  return out;
}

std::vector<double> standardized_locations(std::size_t count, std::uint64_t seed) {
  if (count < 2) throw std::invalid_argument("standardized_locations: need at least 2 locations");
  auto rng = make_stream(seed, 0, stream_domain::data);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(count);
  for (double& x : v) x = normal(rng);
  const double mean = pairwise_sum(v) / static_cast<double>(count);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(count));
  for (double& x : v) x = (x - mean) / sd;
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace entropic
