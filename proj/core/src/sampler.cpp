#include "entropic/sampler.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace entropic {

const char* to_string(SolverKind kind) {
  return kind == SolverKind::ddim_deterministic ? "ddim_deterministic" : "ddim_stochastic";
}

SolverKind solver_kind_from_string(const std::string& s) {
  if (s == "ddim_deterministic" || s == "deterministic") return SolverKind::ddim_deterministic;
  if (s == "ddim_stochastic" || s == "stochastic") return SolverKind::ddim_stochastic;
  throw std::invalid_argument("unknown solver kind '" + s + "'");
}

std::size_t function_evaluations(const Schedule& schedule, const SolverOptions& options) {
  return schedule.steps() + (options.final_to_mean ? 1 : 0);
}

std::size_t steps_for_nfe(std::size_t nfe, const SolverOptions& options) {
  const std::size_t extra = options.final_to_mean ? 1 : 0;
  if (nfe < extra + 1) {
    throw std::invalid_argument("NFE " + std::to_string(nfe) + " leaves no sampling step");
  }
  return nfe - extra;
}

void ddim_step(SolverKind kind, std::span<const double> x, std::span<const double> x0_hat, NoiseLevel current,
               NoiseLevel next, Rng* rng, std::span<double> out) {
  if (x.size() != x0_hat.size() || out.size() != x.size()) throw std::invalid_argument("ddim_step: size mismatch");
  if (!(next.sigma < current.sigma)) {
    throw std::invalid_argument("ddim_step: next sigma must be below the current sigma");
  }
  if (!(current.scale > 0.0) || !(next.scale > 0.0) || !(next.sigma >= 0.0)) {
    throw std::invalid_argument("ddim_step: scales must be positive and sigma non-negative");
  }
  const std::size_t D = x.size();
  if (next.sigma == 0.0) {
    for (std::size_t d = 0; d < D; ++d) out[d] = next.scale * x0_hat[d];
    return;
  }
  if (kind == SolverKind::ddim_deterministic) {
    const double ratio = next.sigma / current.sigma;
    for (std::size_t d = 0; d < D; ++d) {
      const double z = x[d] / current.scale;
      out[d] = next.scale * (x0_hat[d] + ratio * (z - x0_hat[d]));
    }
    return;
  }
  if (!rng) throw std::invalid_argument("ddim_step: the stochastic solver needs a random stream");
  const double r2 = (next.sigma * next.sigma) / (current.sigma * current.sigma);
  const double tau = next.sigma * std::sqrt(1.0 - r2);
  std::normal_distribution<double> normal;
  for (std::size_t d = 0; d < D; ++d) {
    const double z = x[d] / current.scale;
    out[d] = next.scale * (x0_hat[d] + r2 * (z - x0_hat[d]) + tau * normal(*rng));
  }
}

Samples generate(const DiffusionSpec& spec, const Schedule& schedule, const Denoiser& denoiser, std::size_t dim,
                 const SolverOptions& options, std::size_t n_paths, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("generate: dimension must be positive");
  schedule.require_within(spec);
  Samples out(n_paths, dim);
  const std::size_t n = schedule.points();
  parallel_for(n_paths, [&](std::size_t p) {
    auto rng = make_stream(seed, p, stream_domain::generation);
    std::normal_distribution<double> normal;
    auto x = out.row(p);
    std::vector<double> x0(dim);
    const auto start = schedule.level(0);
    for (double& v : x) v = start.scale * start.sigma * normal(rng);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      denoiser(x, schedule.level(i), x0);
      ddim_step(options.kind, x, x0, schedule.level(i), schedule.level(i + 1), &rng, x);
    }
    if (options.final_to_mean) {
      denoiser(x, schedule.level(n - 1), x0);
      ddim_step(options.kind, x, x0, schedule.level(n - 1), NoiseLevel{0.0, 1.0}, &rng, x);
    }
  });
  return out;
}

double gaussian_exact_trajectory(double c, const Schedule& schedule, double x_init, bool final_to_mean) {
  if (!(c > 0.0)) throw std::invalid_argument("gaussian_exact_trajectory: c must be positive");
  const double c2 = c * c;
  const auto& sig = schedule.sigmas();
  double z = x_init / schedule.scales().front();
  for (std::size_t i = 0; i + 1 < sig.size(); ++i) z *= (c2 + sig[i + 1] * sig[i]) / (c2 + sig[i] * sig[i]);
  if (final_to_mean) return z * c2 / (c2 + sig.back() * sig.back());
  return schedule.scales().back() * z;
}

}  // namespace entropic
