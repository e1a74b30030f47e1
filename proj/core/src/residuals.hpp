#pragma once

// Shared Monte-Carlo driver for the plain and spectral error tables. Both
// must see the same draws for a given seed so their totals agree.

#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "entropic/entropy.hpp"

namespace entropic::detail {

inline void require_grid(const DiffusionSpec& spec, std::span<const double> grid, const char* what) {
  if (grid.empty()) throw std::invalid_argument(std::string(what) + ": empty time grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!spec.contains(grid[i])) {
      throw std::domain_error(std::string(what) + ": grid time " + std::to_string(grid[i]) + " outside [" +
                              std::to_string(spec.t_min()) + ", " + std::to_string(spec.t_max()) + "]");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw std::invalid_argument(std::string(what) + ": grid must be strictly increasing (index " +
                                  std::to_string(i) + ")");
    }
  }
}

// Draws M pairs (x0, nu) from `rng`, forms x_t = s x0 + s sigma nu, denoises,
// and hands each residual x_hat0 - x0 to sink(residual).
template <class Sink>
void draw_residuals(const Denoiser& denoiser, NoiseLevel level, const DataSampler& sampler, std::size_t dim,
                    std::size_t samples, Rng& rng, Sink&& sink) {
  std::normal_distribution<double> normal;
  std::vector<double> x0(dim), xt(dim), xhat(dim), residual(dim);
  const double noise_std = level.scale * level.sigma;
  for (std::size_t j = 0; j < samples; ++j) {
    sampler(rng, x0);
    for (std::size_t d = 0; d < dim; ++d) xt[d] = level.scale * x0[d] + noise_std * normal(rng);
    denoiser(xt, level, xhat);
    for (std::size_t d = 0; d < dim; ++d) {
      residual[d] = xhat[d] - x0[d];
      if (!std::isfinite(residual[d])) throw std::runtime_error("denoiser returned a non-finite value");
    }
    sink(std::span<const double>(residual));
  }
}

}  // namespace entropic::detail
