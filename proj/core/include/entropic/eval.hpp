#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "entropic/analytic.hpp"
#include "entropic/numeric.hpp"
#include "entropic/process.hpp"
#include "entropic/sampler.hpp"
#include "entropic/schedule.hpp"

namespace entropic {

/// target_first is KL(target || model); samples_first is KL(model || target).
enum class KlDirection { target_first, samples_first };

const char* to_string(KlDirection d);
KlDirection kl_direction_from_string(const std::string& s);

struct BinnedKl {
  double kl = 0.0;                  // +inf when a required bin is empty
  std::vector<std::size_t> counts;  // samples per bin, in target order
  std::size_t outside = 0;          // samples in no bin
  std::size_t empty_bins = 0;       // bins with zero count
};

/// KL between the target weights and the histogram of samples over the boxes
/// [a_k - eps, a_k + eps] (max-norm). target_first uses p_bin = count / n with
/// n all samples, so mass outside the bins counts against the model;
/// samples_first normalizes over in-bin samples only. Throws if the boxes overlap.
BinnedKl binned_kl(const Samples& samples, const Mixture& target, double half_width,
                   KlDirection direction = KlDirection::target_first);

/// 0.25 times the smallest max-norm gap between support points.
double default_bin_half_width(const Mixture& target);

/// Monte-Carlo KL(target || KDE of samples) with an isotropic Gaussian kernel
/// of standard deviation `bandwidth`, from `n_mc` target draws on stream (seed, 0).
Estimate kde_kl(const Samples& samples, const Mixture& target, double bandwidth, std::size_t n_mc,
                std::uint64_t seed);

/// Log density of the Gaussian KDE of `samples` at y. For 1-D data pass
/// samples sorted ascending and set `sorted` to use a windowed sum.
double kde_logpdf(const Samples& samples, double bandwidth, std::span<const double> y, bool sorted = false);

/// A named schedule family: builds the schedule for a given number of steps.
struct ScheduleBuilder {
  std::string name;
  std::function<Schedule(std::size_t steps)> build;
};

enum class KlMethod { binned, kde };

struct KlSettings {
  std::vector<std::size_t> nfe{4, 8, 16, 32, 64};
  std::size_t repeats = 100;
  std::size_t paths = 10000;
  std::uint64_t seed = 0;
  bool final_to_mean = true;
  KlMethod method = KlMethod::binned;  // binned for point targets, kde for Gaussian targets
  KlDirection direction = KlDirection::target_first;
  double bin_half_width = 0.0;  // 0 selects default_bin_half_width
  double bandwidth = 1e-2;
  std::size_t n_mc = 1000;
};

struct KlEntry {
  std::string schedule;
  SolverKind solver = SolverKind::ddim_deterministic;
  std::size_t nfe = 0;
  double kl_mean = 0.0;
  double kl_std = 0.0;  // sample standard deviation over repeats
  std::size_t repeats = 0;
  std::size_t paths = 0;
  std::uint64_t seed = 0;
  std::size_t infinite = 0;  // repeats with an infinite KL

  double std_error() const;
};

struct KlReport {
  std::vector<KlEntry> entries;
  std::string method;      // "binned" or "kde"
  std::string direction;   // "target_first" or "samples_first"
  double bin_half_width = 0.0;
  double bandwidth = 0.0;
  std::size_t n_mc = 0;

  const KlEntry& find(const std::string& schedule, SolverKind solver, std::size_t nfe) const;
};

/// Seed used by repeat r: seed + r, so repeat 0 is exactly a single run with `seed`.
std::uint64_t repeat_seed(std::uint64_t seed, std::size_t repeat);

/// KL of one sample set under the report settings (same evaluation seed as a repeat).
double evaluate_kl(const Samples& samples, const Mixture& target, const KlSettings& settings, std::uint64_t seed);

/// For every builder, solver and NFE: generate `paths` samples `repeats`
/// times with the exact denoiser of `dist` and evaluate the KL. Repeats share
/// seeds across schedules (paired comparisons).
KlReport kl_experiment(const DiffusionSpec& spec, const Mixture& dist, const std::vector<ScheduleBuilder>& schedules,
                       const std::vector<SolverKind>& solvers, const KlSettings& settings);

}  // namespace entropic
