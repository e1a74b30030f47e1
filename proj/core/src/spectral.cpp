#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "entropic/entropy.hpp"
#include "residuals.hpp"

namespace entropic {

namespace {

void twiddles(std::size_t n, std::vector<double>& c, std::vector<double>& s) {
  c.resize(n);
  s.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    c[k] = std::cos(a);
    s[k] = -std::sin(a);
  }
}

}  // namespace

UnitaryDft2d::UnitaryDft2d(ArrayShape shape) : shape_(shape) {
  if (shape.height == 0 || shape.width == 0) throw std::invalid_argument("dft: empty shape");
  twiddles(shape.height, cos_h_, sin_h_);
  twiddles(shape.width, cos_w_, sin_w_);
}

void UnitaryDft2d::power(std::span<const double> x, std::span<double> out) const {
  const std::size_t H = shape_.height, W = shape_.width;
  if (x.size() != H * W || out.size() != H * W) throw std::invalid_argument("dft: size does not match shape");
  // Row transforms, then column transforms, each with 1/sqrt(n).
  std::vector<double> re(H * W), im(H * W);
  const double row_norm = 1.0 / std::sqrt(static_cast<double>(W));
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t v = 0; v < W; ++v) {
      double a = 0.0, b = 0.0;
      for (std::size_t w = 0; w < W; ++w) {
        const std::size_t k = (v * w) % W;
        a += x[h * W + w] * cos_w_[k];
        b += x[h * W + w] * sin_w_[k];
      }
      re[h * W + v] = a * row_norm;
      im[h * W + v] = b * row_norm;
    }
  }
  const double col_norm = 1.0 / std::sqrt(static_cast<double>(H));
  for (std::size_t u = 0; u < H; ++u) {
    for (std::size_t v = 0; v < W; ++v) {
      double a = 0.0, b = 0.0;
      for (std::size_t h = 0; h < H; ++h) {
        const std::size_t k = (u * h) % H;
        const double cr = cos_h_[k], ci = sin_h_[k];
        a += re[h * W + v] * cr - im[h * W + v] * ci;
        b += re[h * W + v] * ci + im[h * W + v] * cr;
      }
      a *= col_norm;
      b *= col_norm;
      out[u * W + v] = a * a + b * b;
    }
  }
}

namespace {

// Fills `out` with the squared coefficients of `r` in the chosen basis.
class BasisPower {
 public:
  BasisPower(ArrayShape shape, SpectralBasis basis) : basis_(basis), dft_(shape) {}
  void operator()(std::span<const double> r, std::span<double> out) const {
    if (basis_ == SpectralBasis::fourier) {
      dft_.power(r, out);
    } else {
      for (std::size_t i = 0; i < r.size(); ++i) out[i] = r[i] * r[i];
    }
  }

 private:
  SpectralBasis basis_;
  UnitaryDft2d dft_;
};

}  // namespace

ErrorTable spectral_error_table(const Denoiser& denoiser, const DiffusionSpec& spec, const DataSampler& sampler,
                                ArrayShape shape, std::span<const double> grid, std::size_t samples,
                                std::uint64_t seed, SpectralBasis basis) {
  if (samples == 0) throw std::invalid_argument("spectral_error_table: need at least one sample per time");
  if (shape.size() == 0) throw std::invalid_argument("spectral_error_table: empty shape");
  detail::require_grid(spec, grid, "spectral_error_table");

  const std::size_t B = shape.size();
  const BasisPower project(shape, basis);
  ErrorTable table;
  table.times.assign(grid.begin(), grid.end());
  table.eps2.resize(grid.size());
  table.std_errors.resize(grid.size());
  table.basis_count = B;
  table.per_basis.assign(grid.size() * B, 0.0);
  table.provenance = {"mc", samples, seed};

  parallel_for(grid.size(), [&](std::size_t i) {
    auto rng = make_stream(seed, i, stream_domain::estimation);
    std::vector<double> err, power(B), sums(B, 0.0);
    err.reserve(samples);
    detail::draw_residuals(denoiser, spec.level(grid[i]), sampler, B, samples, rng, [&](std::span<const double> r) {
      double acc = 0.0;
      for (double v : r) acc += v * v;
      err.push_back(acc);
      project(r, power);
      for (std::size_t b = 0; b < B; ++b) sums[b] += power[b];
    });
    const auto est = mean_and_stderr(err);
    table.eps2[i] = est.mean;
    table.std_errors[i] = est.std_error;
    for (std::size_t b = 0; b < B; ++b) table.per_basis[i * B + b] = sums[b] / static_cast<double>(samples);
  });
  return table;
}

std::vector<double> spectral_amplitudes(const DataSampler& sampler, ArrayShape shape, std::size_t samples,
                                        std::uint64_t seed, SpectralBasis basis) {
  if (samples == 0) throw std::invalid_argument("spectral_amplitudes: need at least one sample");
  const std::size_t B = shape.size();
  const BasisPower project(shape, basis);
  auto rng = make_stream(seed, 0, stream_domain::data);
  std::vector<double> x(B), power(B), sums(B, 0.0);
  for (std::size_t j = 0; j < samples; ++j) {
    sampler(rng, x);
    project(x, power);
    for (std::size_t b = 0; b < B; ++b) sums[b] += power[b];
  }
  for (double& v : sums) v /= static_cast<double>(samples);
  return sums;
}

SpectralCurves spectral_rescaled_entropy(const ErrorTable& table, const DiffusionSpec& spec,
                                         std::span<const double> amplitudes, IntegrationRule rule) {
  if (!table.spectral()) throw std::invalid_argument("spectral_rescaled_entropy: table has no per-basis values");
  table.validate(&spec);
  if (table.size() < 2) throw std::invalid_argument("spectral_rescaled_entropy: need at least two grid times");
  const std::size_t B = table.basis_count, N = table.size();
  if (amplitudes.size() != B) {
    throw std::invalid_argument("spectral_rescaled_entropy: " + std::to_string(amplitudes.size()) +
                                " amplitudes for " + std::to_string(B) + " basis directions");
  }
  for (double a : amplitudes) {
    if (!(a >= 0.0) || !std::isfinite(a)) {
      throw std::invalid_argument("spectral_rescaled_entropy: amplitudes must be finite and non-negative");
    }
  }

  std::vector<double> weight(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double t = table.times[i];
    const double sigma = spec.noise(t);
    weight[i] = spec.noise_rate(t) / (sigma * sigma);
  }

  std::vector<EntropyCurve> per_basis;
  per_basis.reserve(B);
  std::vector<std::size_t> excluded;
  std::vector<double> combined(N, 0.0), f(N), acc(N);
  double amplitude_sum = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < N; ++i) f[i] = weight[i] * table.per_basis[i * B + b];
    acc.assign(N, 0.0);
    for (std::size_t i = 0; i + 1 < N; ++i) {
      const double dt = table.times[i + 1] - table.times[i];
      acc[i + 1] = acc[i] + (rule == IntegrationRule::left_riemann ? f[i] * dt : 0.5 * (f[i] + f[i + 1]) * dt);
    }
    const double final_value = acc.back();
    if (!(final_value > 0.0)) {
      excluded.push_back(b);
      per_basis.emplace_back(table.times, std::vector<double>(N, 0.0), CurveKind::spectral_rescaled);
      continue;
    }
    for (double& v : acc) v /= final_value;
    acc.back() = 1.0;
    for (std::size_t i = 0; i < N; ++i) combined[i] += amplitudes[b] * acc[i];
    amplitude_sum += amplitudes[b];
    per_basis.emplace_back(table.times, acc, CurveKind::spectral_rescaled);
  }
  if (!(amplitude_sum > 0.0)) {
    throw std::invalid_argument("spectral_rescaled_entropy: no basis direction with both error and amplitude");
  }
  for (double& v : combined) v /= amplitude_sum;

  SpectralCurves out{EntropyCurve(table.times, combined, CurveKind::spectral_rescaled), std::move(per_basis),
                     std::move(excluded)};
  if (!out.excluded.empty()) {
    out.combined.warnings.push_back(std::to_string(out.excluded.size()) +
                                    " basis direction(s) with identically zero error were excluded");
  }
  return out;
}

std::vector<std::size_t> radial_bins(ArrayShape shape, RadialBinning binning, double annulus_width) {
  if (binning == RadialBinning::annulus && !(annulus_width > 0.0)) {
    throw std::invalid_argument("radial_bins: annulus width must be positive");
  }
  const auto signed_freq = [](std::size_t k, std::size_t n) {
    return k <= n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
  };
  std::vector<std::size_t> out(shape.size());
  for (std::size_t u = 0; u < shape.height; ++u) {
    for (std::size_t v = 0; v < shape.width; ++v) {
      const double r = std::hypot(signed_freq(u, shape.height), signed_freq(v, shape.width));
      out[u * shape.width + v] = binning == RadialBinning::integer_ring
                                     ? static_cast<std::size_t>(std::lround(r))
                                     : static_cast<std::size_t>(std::floor(r / annulus_width));
    }
  }
  return out;
}

std::vector<std::vector<double>> radial_profile(const SpectralCurves& curves, ArrayShape shape, RadialBinning binning,
                                                double annulus_width) {
  if (curves.per_basis.size() != shape.size()) {
    throw std::invalid_argument("radial_profile: curve count does not match shape");
  }
  const auto bins = radial_bins(shape, binning, annulus_width);
  const std::size_t n_bins = *std::max_element(bins.begin(), bins.end()) + 1;
  const std::size_t N = curves.combined.times().size();
  std::vector<std::vector<double>> sums(n_bins, std::vector<double>(N, 0.0));
  std::vector<std::size_t> counts(n_bins, 0);
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (std::find(curves.excluded.begin(), curves.excluded.end(), b) != curves.excluded.end()) continue;
    const auto& values = curves.per_basis[b].values();
    for (std::size_t i = 0; i < N; ++i) sums[bins[b]][i] += values[i];
    ++counts[bins[b]];
  }
  for (std::size_t k = 0; k < n_bins; ++k) {
    for (double& v : sums[k]) {
      v = counts[k] == 0 ? std::numeric_limits<double>::quiet_NaN() : v / static_cast<double>(counts[k]);
    }
  }
  return sums;
}

}  // namespace entropic
