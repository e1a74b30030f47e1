#include "entropic/process.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "entropic/numeric.hpp"

namespace entropic {

namespace {

std::string fmt_num(double v) { return format_double(v); }

double rel_diff(double x, double y) {
  const double scale = std::max(std::abs(x), std::abs(y));
  if (scale == 0.0) return 0.0;
  return std::abs(x - y) / scale;
}

// Bracketed Newton solve of f(t) = target for increasing f on [lo, hi].
double solve_increasing(const ScalarFn& f, const ScalarFn& df, double target, double lo, double hi,
                        double guess) {
  const auto fn = [&](double t) { return std::make_pair(f(t) - target, df(t)); };
  std::uintmax_t iters = 64;
  guess = std::clamp(guess, lo, hi);
  return boost::math::tools::newton_raphson_iterate(fn, guess, lo, hi,
                                                    std::numeric_limits<double>::digits - 2, iters);
}

}  // namespace

DiffusionSpec::DiffusionSpec(std::string name, Functions fns, double t_min, double t_max)
    : name_(std::move(name)), fns_(std::move(fns)), t_min_(t_min), t_max_(t_max) {
  if (!fns_.scale || !fns_.noise || !fns_.scale_rate || !fns_.noise_rate) {
    throw std::invalid_argument("DiffusionSpec '" + name_ + "': all four functions are required");
  }
  if (!(t_min_ > 0.0) || !(t_max_ > t_min_)) {
    throw std::invalid_argument("DiffusionSpec '" + name_ + "': need 0 < t_min < t_max");
  }
  for (double t : geomspace(t_min_, t_max_, 16)) {
    const double s = fns_.scale(t), sig = fns_.noise(t), dsig = fns_.noise_rate(t);
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("DiffusionSpec '" + name_ + "': scale must be positive at t=" + fmt_num(t));
    }
    if (!(sig > 0.0) || !std::isfinite(sig)) {
      throw std::invalid_argument("DiffusionSpec '" + name_ + "': noise must be positive at t=" + fmt_num(t));
    }
    if (!(dsig > 0.0) || !std::isfinite(dsig)) {
      throw std::invalid_argument("DiffusionSpec '" + name_ + "': noise must be strictly increasing (t=" +
                                  fmt_num(t) + ")");
    }
  }
}

DiffusionSpec DiffusionSpec::ve(double t_min, double t_max) {
  Functions f{
      [](double) { return 1.0; },
      [](double t) { return t; },
      [](double) { return 0.0; },
      [](double) { return 1.0; },
  };
  return DiffusionSpec("ve", std::move(f), t_min, t_max);
}

DiffusionSpec DiffusionSpec::vp(double beta_min, double beta_d, double t_min, double t_max) {
  // u(t) = beta_d t^2 / 2 + beta_min t;  sigma = sqrt(e^u - 1);  s = e^{-u/2}
  const auto u = [=](double t) { return 0.5 * beta_d * t * t + beta_min * t; };
  const auto du = [=](double t) { return beta_d * t + beta_min; };
  Functions f{
      [=](double t) { return std::exp(-0.5 * u(t)); },
      [=](double t) { return std::sqrt(std::expm1(u(t))); },
      [=](double t) { return -0.5 * du(t) * std::exp(-0.5 * u(t)); },
      [=](double t) { return std::exp(u(t)) * du(t) / (2.0 * std::sqrt(std::expm1(u(t)))); },
  };
  return DiffusionSpec("vp", std::move(f), t_min, t_max);
}

DiffusionSpec DiffusionSpec::with_finite_differences(std::string name, ScalarFn scale, ScalarFn noise,
                                                     double t_min, double t_max) {
  const auto central = [](ScalarFn fn) {
    return [fn = std::move(fn)](double t) {
      const double h = 1e-5 * std::max(std::abs(t), 1e-300);
      return (fn(t + h) - fn(t - h)) / (2.0 * h);
    };
  };
  Functions f{scale, noise, central(scale), central(noise)};
  return DiffusionSpec(std::move(name), std::move(f), t_min, t_max);
}

bool DiffusionSpec::contains(double t) const noexcept {
  // Accept a few ulps of slack at the ends so computed endpoints (e.g. phi(t_min)) are valid.
  const double slack = 8 * std::numeric_limits<double>::epsilon();
  return t >= t_min_ * (1.0 - slack) && t <= t_max_ * (1.0 + slack);
}

void DiffusionSpec::require_in_domain(double t) const {
  if (!contains(t)) {
    throw std::domain_error("DiffusionSpec '" + name_ + "': t=" + fmt_num(t) + " outside [" + fmt_num(t_min_) +
                            ", " + fmt_num(t_max_) + "]");
  }
}

double DiffusionSpec::scale(double t) const {
  require_in_domain(t);
  return fns_.scale(t);
}
double DiffusionSpec::noise(double t) const {
  require_in_domain(t);
  return fns_.noise(t);
}
double DiffusionSpec::scale_rate(double t) const {
  require_in_domain(t);
  return fns_.scale_rate(t);
}
double DiffusionSpec::noise_rate(double t) const {
  require_in_domain(t);
  return fns_.noise_rate(t);
}

double DiffusionSpec::time_at_noise(double sigma) const {
  const double lo = fns_.noise(t_min_), hi = fns_.noise(t_max_);
  const double slack = 1e-12;
  if (sigma < lo * (1.0 - slack) || sigma > hi * (1.0 + slack)) {
    throw std::domain_error("DiffusionSpec '" + name_ + "': sigma=" + fmt_num(sigma) + " outside [" + fmt_num(lo) +
                            ", " + fmt_num(hi) + "]");
  }
  if (sigma <= lo) return t_min_;
  if (sigma >= hi) return t_max_;
  // Geometric bisection for a starting point, then Newton inside the bracket.
  double a = t_min_, b = t_max_;
  for (int i = 0; i < 40; ++i) {
    const double m = std::sqrt(a * b);
    (fns_.noise(m) < sigma ? a : b) = m;
  }
  return solve_increasing(fns_.noise, fns_.noise_rate, sigma, a, b, std::sqrt(a * b));
}

DriftDiffusion drift_diffusion(const DiffusionSpec& spec, double t) {
  const double s = spec.scale(t);
  const double sig = spec.noise(t);
  return {spec.scale_rate(t) / s, s * std::sqrt(2.0 * spec.noise_rate(t) * sig)};
}

ForwardKernel forward_kernel(const DiffusionSpec& spec, double t) {
  const double s = spec.scale(t);
  return {s, s * spec.noise(t)};
}

// ---------------------------------------------------------------------------

TimeChange::TimeChange(ScalarFn map, ScalarFn rate, double t_min, double t_max, std::size_t grid_points)
    : map_(std::move(map)), rate_(std::move(rate)), t_min_(t_min), t_max_(t_max) {
  if (!map_ || !rate_) throw std::invalid_argument("TimeChange: map and rate are required");
  if (!(t_max_ > t_min_)) throw std::invalid_argument("TimeChange: need t_min < t_max");
  if (grid_points < 2) throw std::invalid_argument("TimeChange: need at least 2 grid points");
  auto ts = t_min_ > 0.0 ? geomspace(t_min_, t_max_, grid_points) : linspace(t_min_, t_max_, grid_points);
  std::vector<double> us(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    us[i] = map_(ts[i]);
    if (!std::isfinite(us[i])) throw std::invalid_argument("TimeChange: map is not finite at t=" + fmt_num(ts[i]));
    if (i > 0 && !(us[i] > us[i - 1])) {
      throw std::invalid_argument("TimeChange: map is not strictly increasing near t=" + fmt_num(ts[i]));
    }
  }
  grid_t_ = std::make_shared<const std::vector<double>>(std::move(ts));
  grid_u_ = std::make_shared<const std::vector<double>>(std::move(us));
}

TimeChange TimeChange::identity(double t_min, double t_max) {
  TimeChange tc([](double t) { return t; }, [](double) { return 1.0; }, t_min, t_max, 2);
  tc.inverse_ = [](double u) { return u; };
  return tc;
}

TimeChange TimeChange::power(double exponent, double t_min, double t_max) {
  if (!(exponent > 0.0)) throw std::invalid_argument("TimeChange::power: exponent must be positive");
  TimeChange tc([exponent](double t) { return std::pow(t, exponent); },
                [exponent](double t) { return exponent * std::pow(t, exponent - 1.0); }, t_min, t_max);
  tc.inverse_ = [exponent](double u) { return std::pow(u, 1.0 / exponent); };
  return tc;
}

TimeChange TimeChange::closed_form(ScalarFn map, ScalarFn rate, ScalarFn inverse, double t_min, double t_max) {
  if (!inverse) throw std::invalid_argument("TimeChange::closed_form: inverse is required");
  TimeChange tc(std::move(map), std::move(rate), t_min, t_max);
  tc.inverse_ = std::move(inverse);
  return tc;
}

double TimeChange::operator()(double t) const { return map_(t); }

double TimeChange::rate(double t) const { return rate_(t); }

double TimeChange::inverse(double u) const {
  const double lo = range_min(), hi = range_max();
  const double slack = 1e-12 * std::max(std::abs(lo), std::abs(hi));
  if (u < lo - slack || u > hi + slack) {
    throw std::domain_error("TimeChange::inverse: u=" + fmt_num(u) + " outside [" + fmt_num(lo) + ", " +
                            fmt_num(hi) + "]");
  }
  if (inverse_) return std::clamp(inverse_(u), t_min_, t_max_);
  u = std::clamp(u, lo, hi);
  const auto& ts = *grid_t_;
  const auto& us = *grid_u_;
  const auto it = std::lower_bound(us.begin(), us.end(), u);
  const auto i = static_cast<std::size_t>(it - us.begin());
  if (i == 0) return ts.front();
  if (us[i] == u) return ts[i];
  const double guess = interp_linear(*grid_u_, *grid_t_, u);
  return solve_increasing(map_, rate_, u, ts[i - 1], ts[i], guess);
}

TimeChange TimeChange::inverted() const {
  TimeChange inv;
  const TimeChange self = *this;
  inv.map_ = [self](double u) { return self.inverse(u); };
  inv.rate_ = [self](double u) { return 1.0 / self.rate(self.inverse(u)); };
  inv.inverse_ = map_;
  inv.t_min_ = range_min();
  inv.t_max_ = range_max();
  inv.grid_t_ = grid_u_;
  inv.grid_u_ = grid_t_;
  return inv;
}

TimeChange TimeChange::anchored() const {
  TimeChange out = *this;
  const double offset = map_(t_min_);
  out.map_ = [m = map_, offset](double t) { return m(t) - offset; };
  if (inverse_) out.inverse_ = [inv = inverse_, offset](double u) { return inv(u + offset); };
  auto us = *grid_u_;
  for (double& u : us) u -= offset;
  out.grid_u_ = std::make_shared<const std::vector<double>>(std::move(us));
  return out;
}

DiffusionSpec apply_time_change(const DiffusionSpec& spec, const TimeChange& phi) {
  const double lo = phi(phi.t_min()), hi = phi(phi.t_max());
  if (!spec.contains(lo) || !spec.contains(hi)) {
    throw std::domain_error("apply_time_change: range [" + fmt_num(lo) + ", " + fmt_num(hi) +
                            "] of the time change is not inside the domain of '" + spec.name() + "'");
  }
  // Clamp so that phi(t_min)/phi(t_max) rounding never escapes the parent domain.
  const auto at = [spec, phi](double t) { return std::clamp(phi(t), spec.t_min(), spec.t_max()); };
  DiffusionSpec::Functions f{
      [spec, at](double t) { return spec.scale(at(t)); },
      [spec, at](double t) { return spec.noise(at(t)); },
      [spec, phi, at](double t) { return spec.scale_rate(at(t)) * phi.rate(t); },
      [spec, phi, at](double t) { return spec.noise_rate(at(t)) * phi.rate(t); },
  };
  return DiffusionSpec(spec.name() + "|timechanged", std::move(f), phi.t_min(), phi.t_max());
}

EquivalenceCheck check_equivalence(const DiffusionSpec& a, const DiffusionSpec& b, const TimeChange& phi,
                                   double tolerance, std::size_t probes) {
  if (probes < 2) throw std::invalid_argument("check_equivalence: need at least 2 probes");
  const double lo = std::max(phi.t_min(), a.t_min());
  const double hi = std::min(phi.t_max(), a.t_max());
  if (!(hi > lo)) throw std::domain_error("check_equivalence: time change and spec domains do not overlap");
  EquivalenceCheck out;
  for (double t : geomspace(lo, hi, probes)) {
    const double u = std::clamp(phi(t), b.t_min(), b.t_max());
    if (!b.contains(phi(t))) {
      throw std::domain_error("check_equivalence: phi(" + fmt_num(t) + ") outside the domain of '" + b.name() + "'");
    }
    const double rate = phi.rate(t);
    const auto fa = drift_diffusion(a, t);
    const auto fb = drift_diffusion(b, u);
    out.max_drift_residual = std::max(out.max_drift_residual, rel_diff(rate * fb.drift_coeff, fa.drift_coeff));
    out.max_diffusion_residual =
        std::max(out.max_diffusion_residual, rel_diff(std::sqrt(rate) * fb.diffusion, fa.diffusion));
  }
  out.equivalent = out.max_residual() < tolerance;
  return out;
}

}  // namespace entropic
