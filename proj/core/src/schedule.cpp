#include "entropic/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace entropic {

namespace {

std::string fmt(double v) { return format_double(v); }

void require_steps(std::size_t steps, const char* what) {
  if (steps == 0) throw std::invalid_argument(std::string(what) + ": need at least one step");
}

void require_interval(const DiffusionSpec& spec, double t_min, double t_max, const char* what) {
  if (!(t_min < t_max)) throw std::invalid_argument(std::string(what) + ": need t_min < t_max");
  if (!spec.contains(t_min) || !spec.contains(t_max)) {
    throw std::domain_error(std::string(what) + ": [" + fmt(t_min) + ", " + fmt(t_max) +
                            "] is not inside the process domain");
  }
}

// Ascending values -> descending, with the endpoints pinned.
std::vector<double> descending(std::vector<double> v, double lo, double hi) {
  v.front() = lo;
  v.back() = hi;
  std::reverse(v.begin(), v.end());
  return v;
}

}  // namespace

Schedule::Schedule(std::string label, std::vector<double> times, std::vector<double> sigmas,
                   std::vector<double> scales)
    : label_(std::move(label)), times_(std::move(times)), sigmas_(std::move(sigmas)), scales_(std::move(scales)) {
  if (times_.size() < 2) throw std::invalid_argument("schedule: need at least two points");
  if (sigmas_.size() != times_.size() || scales_.size() != times_.size()) {
    throw std::invalid_argument("schedule: times, sigmas and scales differ in length");
  }
  for (std::size_t i = 0; i < times_.size(); ++i) {
    const std::string at = " (index " + std::to_string(i) + ")";
    if (!std::isfinite(times_[i]) || !std::isfinite(sigmas_[i]) || !std::isfinite(scales_[i])) {
      throw std::invalid_argument("schedule: non-finite entry" + at);
    }
    if (!(sigmas_[i] > 0.0)) throw std::invalid_argument("schedule: sigma must be positive" + at);
    if (!(scales_[i] > 0.0)) throw std::invalid_argument("schedule: scale must be positive" + at);
    if (i > 0 && !(times_[i] < times_[i - 1])) throw std::invalid_argument("schedule: times must descend" + at);
    if (i > 0 && !(sigmas_[i] < sigmas_[i - 1])) throw std::invalid_argument("schedule: sigmas must descend" + at);
  }
}

Schedule Schedule::from_times(const DiffusionSpec& spec, std::vector<double> times, std::string label) {
  std::vector<double> sigmas(times.size()), scales(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    sigmas[i] = spec.noise(times[i]);
    scales[i] = spec.scale(times[i]);
  }
  return Schedule(std::move(label), std::move(times), std::move(sigmas), std::move(scales));
}

Schedule Schedule::from_sigmas(const DiffusionSpec& spec, std::vector<double> sigmas, std::string label) {
  std::vector<double> times(sigmas.size()), scales(sigmas.size());
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    times[i] = spec.time_at_noise(sigmas[i]);
    scales[i] = spec.scale(times[i]);
  }
  return Schedule(std::move(label), std::move(times), std::move(sigmas), std::move(scales));
}

void Schedule::require_within(const DiffusionSpec& spec) const {
  for (double t : times_) {
    if (!spec.contains(t)) {
      throw std::domain_error("schedule '" + label_ + "': time " + fmt(t) + " outside the domain of '" +
                              spec.name() + "'");
    }
  }
}

std::vector<double> edm_sigmas(double sigma_min, double sigma_max, double rho, std::size_t steps) {
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min)) {
    throw std::invalid_argument("edm_sigmas: need 0 < sigma_min < sigma_max");
  }
  if (!(rho > 0.0)) throw std::invalid_argument("edm_sigmas: rho must be positive");
  require_steps(steps, "edm_sigmas");
  const double a = std::pow(sigma_max, 1.0 / rho), b = std::pow(sigma_min, 1.0 / rho);
  std::vector<double> out(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(steps);
    out[i] = std::pow(a + f * (b - a), rho);
  }
  out.front() = sigma_max;
  out.back() = sigma_min;
  return out;
}

Schedule edm_schedule(const DiffusionSpec& spec, double sigma_min, double sigma_max, double rho, std::size_t steps) {
  auto sigmas = edm_sigmas(sigma_min, sigma_max, rho, steps);
  return Schedule::from_sigmas(spec, std::move(sigmas),
                               "edm(rho=" + fmt(rho) + ",sigma_min=" + fmt(sigma_min) + ",sigma_max=" +
                                   fmt(sigma_max) + ",steps=" + std::to_string(steps) + ")");
}

Schedule uniform_schedule(const DiffusionSpec& spec, double t_min, double t_max, std::size_t steps) {
  require_steps(steps, "uniform_schedule");
  require_interval(spec, t_min, t_max, "uniform_schedule");
  std::vector<double> t(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    t[i] = t_min + (t_max - t_min) * (static_cast<double>(i) / static_cast<double>(steps));
  }
  return Schedule::from_times(spec, descending(std::move(t), t_min, t_max),
                              "uniform(steps=" + std::to_string(steps) + ")");
}

Schedule gaussian_optimal_schedule(const DiffusionSpec& spec, double c, double t_min, double t_max,
                                   std::size_t steps) {
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("gaussian_optimal_schedule: c must be positive");
  require_steps(steps, "gaussian_optimal_schedule");
  require_interval(spec, t_min, t_max, "gaussian_optimal_schedule");
  const double a_lo = std::atan(spec.noise(t_min) / c), a_hi = std::atan(spec.noise(t_max) / c);
  std::vector<double> t(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(steps);
    t[i] = spec.time_at_noise(c * std::tan(a_lo + f * (a_hi - a_lo)));
  }
  return Schedule::from_times(spec, descending(std::move(t), t_min, t_max),
                              "gaussian_optimal(c=" + fmt(c) + ",steps=" + std::to_string(steps) + ")");
}

Schedule entropic_schedule(const DiffusionSpec& spec, const EntropyCurve& curve, double t_min, double t_max,
                           std::size_t steps) {
  require_steps(steps, "entropic_schedule");
  require_interval(spec, t_min, t_max, "entropic_schedule");
  const double slack = 1e-12 * (curve.t_max() - curve.t_min());
  if (t_min < curve.t_min() - slack || t_max > curve.t_max() + slack) {
    throw std::domain_error("entropic_schedule: [" + fmt(t_min) + ", " + fmt(t_max) +
                            "] is outside the curve support [" + fmt(curve.t_min()) + ", " + fmt(curve.t_max()) + "]");
  }
  const double lo = curve(std::max(t_min, curve.t_min()));
  const double hi = curve(std::min(t_max, curve.t_max()));
  if (!(hi > lo)) {
    throw std::invalid_argument("entropic_schedule: curve is constant on [" + fmt(t_min) + ", " + fmt(t_max) + "]");
  }
  // Plateaus at either end level are harmless: those endpoints are pinned.
  const auto& ts = curve.times();
  const auto& vs = curve.values();
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const bool overlaps = ts[k + 1] > t_min && ts[k] < t_max;
    if (overlaps && vs[k + 1] == vs[k] && vs[k] != lo && vs[k] != hi) {
      throw std::invalid_argument("entropic_schedule: curve is flat on [" + fmt(ts[k]) + ", " + fmt(ts[k + 1]) +
                                  "]; the inverse is not unique there");
    }
  }
  std::vector<double> t(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) {
    const double f = static_cast<double>(j) / static_cast<double>(steps);
    t[j] = curve.inverse(lo + f * (hi - lo));
  }
  return Schedule::from_times(spec, descending(std::move(t), t_min, t_max),
                              std::string(to_string(curve.kind())) + "(steps=" + std::to_string(steps) + ")");
}

Schedule entropic_schedule(const DiffusionSpec& spec, const TimeChange& clock, double t_min, double t_max,
                           std::size_t steps, std::string label) {
  require_steps(steps, "entropic_schedule");
  require_interval(spec, t_min, t_max, "entropic_schedule");
  const double lo = clock(t_min), hi = clock(t_max);
  std::vector<double> t(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) {
    const double f = static_cast<double>(j) / static_cast<double>(steps);
    t[j] = clock.inverse(lo + f * (hi - lo));
  }
  return Schedule::from_times(spec, descending(std::move(t), t_min, t_max),
                              label + "(steps=" + std::to_string(steps) + ")");
}

Schedule match_sigmas(const DiffusionSpec& target, const Schedule& source) {
  return Schedule::from_sigmas(target, source.sigmas(), source.label());
}

TimeChange gaussian_rescaled_clock(double c, std::size_t dim, double t_min, double t_max) {
  if (!(c > 0.0)) throw std::invalid_argument("gaussian_rescaled_clock: c must be positive");
  const double D = static_cast<double>(dim);
  return TimeChange::closed_form([c, D](double t) { return D * c * std::atan(t / c); },
                                 [c, D](double t) { return D * c * c / (c * c + t * t); },
                                 [c, D](double u) { return c * std::tan(u / (D * c)); }, t_min, t_max);
}

std::vector<double> edm_time_grid(const DiffusionSpec& spec, std::size_t points, double rho, double sigma_min,
                                  double sigma_max) {
  if (points < 2) throw std::invalid_argument("edm_time_grid: need at least two points");
  auto sigmas = edm_sigmas(sigma_min, sigma_max, rho, points - 1);
  std::reverse(sigmas.begin(), sigmas.end());
  std::vector<double> t(points);
  for (std::size_t i = 0; i < points; ++i) t[i] = spec.time_at_noise(sigmas[i]);
  return t;
}

}  // namespace entropic
