#include "entropic/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "entropic/entropy.hpp"

namespace entropic {

const char* to_string(KlDirection d) { return d == KlDirection::target_first ? "target_first" : "samples_first"; }

KlDirection kl_direction_from_string(const std::string& s) {
  if (s == "target_first" || s == "forward") return KlDirection::target_first;
  if (s == "samples_first" || s == "reverse") return KlDirection::samples_first;
  throw std::invalid_argument("unknown KL direction '" + s + "'");
}

namespace {

double max_norm_gap(const Mixture& target) {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < target.components(); ++i) {
    for (std::size_t j = i + 1; j < target.components(); ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < target.dim(); ++k) d = std::max(d, std::abs(target.mean(i)[k] - target.mean(j)[k]));
      gap = std::min(gap, d);
    }
  }
  return gap;
}

}  // namespace

double default_bin_half_width(const Mixture& target) {
  if (target.components() < 2) return 0.25;
  return 0.25 * max_norm_gap(target);
}

BinnedKl binned_kl(const Samples& samples, const Mixture& target, double half_width, KlDirection direction) {
  if (target.kind() != MixtureKind::point) throw std::invalid_argument("binned_kl: target must be a point mixture");
  if (samples.cols() != target.dim()) throw std::invalid_argument("binned_kl: sample dimension does not match target");
  if (samples.empty()) throw std::invalid_argument("binned_kl: no samples");
  if (!(half_width > 0.0)) throw std::invalid_argument("binned_kl: bin half-width must be positive");
  if (target.components() > 1 && !(2.0 * half_width < max_norm_gap(target))) {
    throw std::invalid_argument("binned_kl: bins of half-width " + format_double(half_width) + " overlap");
  }

  const std::size_t K = target.components(), D = target.dim();
  BinnedKl out;
  out.counts.assign(K, 0);
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    const auto x = samples.row(i);
    bool placed = false;
    for (std::size_t k = 0; k < K && !placed; ++k) {
      const auto a = target.mean(k);
      bool inside = true;
      for (std::size_t d = 0; d < D && inside; ++d) inside = std::abs(x[d] - a[d]) <= half_width;
      if (inside) {
        ++out.counts[k];
        placed = true;
      }
    }
    if (!placed) ++out.outside;
  }
  for (auto c : out.counts) out.empty_bins += c == 0 ? 1 : 0;

  const double n_all = static_cast<double>(samples.rows());
  const double n_in = n_all - static_cast<double>(out.outside);
  double kl = 0.0;
  if (direction == KlDirection::target_first) {
    for (std::size_t k = 0; k < K; ++k) {
      const double w = target.weight(k);
      if (out.counts[k] == 0) {
        out.kl = std::numeric_limits<double>::infinity();
        return out;
      }
      kl += w * std::log(w / (static_cast<double>(out.counts[k]) / n_all));
    }
  } else {
    if (n_in == 0.0) {
      out.kl = std::numeric_limits<double>::infinity();
      return out;
    }
    for (std::size_t k = 0; k < K; ++k) {
      if (out.counts[k] == 0) continue;
      const double q = static_cast<double>(out.counts[k]) / n_in;
      kl += q * std::log(q / target.weight(k));
    }
  }
  out.kl = kl;
  return out;
}

double kde_logpdf(const Samples& samples, double bandwidth, std::span<const double> y, bool sorted) {
  if (samples.empty()) throw std::invalid_argument("kde_logpdf: no samples");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("kde_logpdf: bandwidth must be positive");
  const std::size_t D = samples.cols();
  const double inv2h2 = 0.5 / (bandwidth * bandwidth);
  const double log_norm = std::log(static_cast<double>(samples.rows())) +
                          0.5 * static_cast<double>(D) * std::log(2.0 * std::numbers::pi * bandwidth * bandwidth);
  if (sorted && D == 1) {
    // Kernels beyond 12 bandwidths contribute less than e^-72 relative to the nearest one.
    const auto& v = samples.values();
    const double window = 12.0 * bandwidth;
    auto lo = std::lower_bound(v.begin(), v.end(), y[0] - window);
    auto hi = std::upper_bound(v.begin(), v.end(), y[0] + window);
    if (lo == hi) {
      if (lo == v.end()) --lo;
      else if (lo != v.begin() && y[0] - *(lo - 1) < *lo - y[0]) --lo;
      hi = lo + 1;
    }
    double m = -std::numeric_limits<double>::infinity();
    for (auto it = lo; it != hi; ++it) m = std::max(m, -(y[0] - *it) * (y[0] - *it) * inv2h2);
    double s = 0.0;
    for (auto it = lo; it != hi; ++it) s += std::exp(-(y[0] - *it) * (y[0] - *it) * inv2h2 - m);
    return m + std::log(s) - log_norm;
  }
  std::vector<double> logits(samples.rows());
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    const auto x = samples.row(i);
    double r2 = 0.0;
    for (std::size_t d = 0; d < D; ++d) r2 += (y[d] - x[d]) * (y[d] - x[d]);
    logits[i] = -r2 * inv2h2;
  }
  return log_sum_exp(logits) - log_norm;
}

Estimate kde_kl(const Samples& samples, const Mixture& target, double bandwidth, std::size_t n_mc,
                std::uint64_t seed) {
  if (samples.empty()) throw std::invalid_argument("kde_kl: no samples");
  if (target.kind() != MixtureKind::gaussian) {
    throw std::invalid_argument("kde_kl: target must be a Gaussian mixture (a point target has no density)");
  }
  if (samples.cols() != target.dim()) throw std::invalid_argument("kde_kl: sample dimension does not match target");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("kde_kl: bandwidth must be positive");
  if (n_mc == 0) throw std::invalid_argument("kde_kl: need at least one Monte-Carlo draw");

  const bool one_d = samples.cols() == 1;
  Samples sorted = samples;
  if (one_d) std::sort(sorted.values().begin(), sorted.values().end());

  auto rng = make_stream(seed, 0, stream_domain::evaluation);
  std::vector<double> y(target.dim()), terms(n_mc);
  const NoiseLevel clean{0.0, 1.0};
  for (std::size_t j = 0; j < n_mc; ++j) {
    target.sample_into(rng, y);
    terms[j] = marginal_logpdf(target, clean, y) - kde_logpdf(sorted, bandwidth, y, one_d);
  }
  const auto est = mean_and_stderr(terms);
  return {est.mean, est.std_error};
}

double KlEntry::std_error() const {
  return repeats > 0 ? kl_std / std::sqrt(static_cast<double>(repeats)) : 0.0;
}

const KlEntry& KlReport::find(const std::string& schedule, SolverKind solver, std::size_t nfe) const {
  for (const auto& e : entries) {
    if (e.schedule == schedule && e.solver == solver && e.nfe == nfe) return e;
  }
  throw std::out_of_range("KL report has no entry for " + schedule + " / " + to_string(solver) + " / NFE " +
                          std::to_string(nfe));
}

std::uint64_t repeat_seed(std::uint64_t seed, std::size_t repeat) { return seed + repeat; }

double evaluate_kl(const Samples& samples, const Mixture& target, const KlSettings& settings, std::uint64_t seed) {
  if (settings.method == KlMethod::binned) {
    const double eps = settings.bin_half_width > 0.0 ? settings.bin_half_width : default_bin_half_width(target);
    return binned_kl(samples, target, eps, settings.direction).kl;
  }
  if (settings.direction != KlDirection::target_first) {
    throw std::invalid_argument("kde KL is only available in the target_first direction");
  }
  return kde_kl(samples, target, settings.bandwidth, settings.n_mc, seed).value;
}

KlReport kl_experiment(const DiffusionSpec& spec, const Mixture& dist, const std::vector<ScheduleBuilder>& schedules,
                       const std::vector<SolverKind>& solvers, const KlSettings& settings) {
  if (schedules.empty() || solvers.empty() || settings.nfe.empty()) {
    throw std::invalid_argument("kl_experiment: need at least one schedule, solver and NFE value");
  }
  if (settings.repeats == 0 || settings.paths == 0) {
    throw std::invalid_argument("kl_experiment: repeats and paths must be positive");
  }
  if (settings.method == KlMethod::binned && dist.kind() != MixtureKind::point) {
    throw std::invalid_argument("kl_experiment: binned KL needs a point-mixture target");
  }
  if (settings.method == KlMethod::kde && dist.kind() != MixtureKind::gaussian) {
    throw std::invalid_argument("kl_experiment: KDE KL needs a Gaussian-mixture target");
  }

  KlReport report;
  report.method = settings.method == KlMethod::binned ? "binned" : "kde";
  report.direction = to_string(settings.direction);
  if (settings.method == KlMethod::binned) {
    report.bin_half_width = settings.bin_half_width > 0.0 ? settings.bin_half_width : default_bin_half_width(dist);
  } else {
    report.bandwidth = settings.bandwidth;
    report.n_mc = settings.n_mc;
  }

  const auto denoiser = exact_denoiser(dist);
  for (const auto& builder : schedules) {
    for (const auto solver : solvers) {
      const SolverOptions options{solver, settings.final_to_mean};
      for (const auto nfe : settings.nfe) {
        const auto schedule = builder.build(steps_for_nfe(nfe, options));
        std::vector<double> kl(settings.repeats);
        for (std::size_t r = 0; r < settings.repeats; ++r) {
          const auto seed = repeat_seed(settings.seed, r);
          const auto samples = generate(spec, schedule, denoiser, dist.dim(), options, settings.paths, seed);
          kl[r] = evaluate_kl(samples, dist, settings, seed);
        }
        KlEntry e;
        e.schedule = builder.name;
        e.solver = solver;
        e.nfe = nfe;
        e.repeats = settings.repeats;
        e.paths = settings.paths;
        e.seed = settings.seed;
        e.infinite = static_cast<std::size_t>(std::count_if(kl.begin(), kl.end(), [](double v) { return std::isinf(v); }));
        if (e.infinite > 0) {
          e.kl_mean = std::numeric_limits<double>::infinity();
          e.kl_std = std::numeric_limits<double>::quiet_NaN();
        } else {
          const auto est = mean_and_stderr(kl);
          e.kl_mean = est.mean;
          e.kl_std = est.std_error * std::sqrt(static_cast<double>(kl.size()));
        }
        report.entries.push_back(std::move(e));
      }
    }
  }
  return report;
}

}  // namespace entropic
