#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "entropic/entropy.hpp"
#include "entropic/numeric.hpp"
#include "entropic/process.hpp"
#include "entropic/schedule.hpp"

namespace entropic {

enum class SolverKind { ddim_deterministic, ddim_stochastic };

const char* to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& s);

struct SolverOptions {
  SolverKind kind = SolverKind::ddim_deterministic;
  /// After the last schedule point, emit the posterior mean (a step to sigma = 0, scale 1).
  bool final_to_mean = true;
};

/// Denoiser calls made by one path: one per step, plus the final mean.
std::size_t function_evaluations(const Schedule& schedule, const SolverOptions& options);
/// Steps needed for a given NFE budget. Throws if the budget is too small.
std::size_t steps_for_nfe(std::size_t nfe, const SolverOptions& options);

/// One DDIM update in scaled space z = x / s:
///   deterministic  z' = x0 + (sn / sc) (z - x0)
///   stochastic     z' = x0 + (sn^2 / sc^2) (z - x0) + sn sqrt(1 - sn^2 / sc^2) nu
/// and x' = s_next z'. With next.sigma == 0 the result is s_next x0.
/// `out` may alias `x`. The stochastic kind needs `rng`.
void ddim_step(SolverKind kind, std::span<const double> x, std::span<const double> x0_hat, NoiseLevel current,
               NoiseLevel next, Rng* rng, std::span<double> out);

/// Runs `n_paths` independent reverse trajectories through `schedule`.
/// Path p starts at N(0, (s sigma)^2 I) at the first schedule point and uses
/// stream (seed, p), so a path does not depend on the batch it runs in.
Samples generate(const DiffusionSpec& spec, const Schedule& schedule, const Denoiser& denoiser, std::size_t dim,
                 const SolverOptions& options, std::size_t n_paths, std::uint64_t seed);

/// Deterministic DDIM on N(0, c^2 I) data in closed form: each step multiplies
/// z by (c^2 + sigma_next sigma_cur) / (c^2 + sigma_cur^2); the final mean
/// multiplies by c^2 / (c^2 + sigma_0^2).
double gaussian_exact_trajectory(double c, const Schedule& schedule, double x_init, bool final_to_mean = true);

}  // namespace entropic
