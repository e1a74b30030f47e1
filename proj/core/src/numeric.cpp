#include "entropic/numeric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace entropic {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t index, std::uint64_t domain) {
  return Rng(splitmix64(seed ^ splitmix64(index ^ splitmix64(domain))));
}

Samples::Samples(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw std::invalid_argument("Samples: value count " + std::to_string(values_.size()) +
                                " does not match shape " + std::to_string(rows_) + "x" +
                                std::to_string(cols_));
  }
}

namespace {

constexpr std::size_t kPairwiseBlock = 64;

double pairwise_sum_impl(const double* v, std::size_t n) {
  if (n <= kPairwiseBlock) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_impl(v, half) + pairwise_sum_impl(v + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
  return pairwise_sum_impl(values.data(), values.size());
}

MeanEstimate mean_and_stderr(std::span<const double> values) {
  const auto n = values.size();
  if (n == 0) return {};
  const double mean = pairwise_sum(values) / static_cast<double>(n);
  if (n < 2) return {mean, 0.0};
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = values[i] - mean;
    sq[i] = d * d;
  }
  const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

double log_sum_exp(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

void softmax(std::span<double> logits) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : logits) m = std::max(m, v);
  double s = 0.0;
  for (double& v : logits) {
    v = std::exp(v - m);
    s += v;
  }
  for (double& v : logits) v /= s;
}

double interp_linear(std::span<const double> xs, std::span<const double> ys, double x) {
  if (xs.empty() || xs.size() != ys.size()) throw std::invalid_argument("interp_linear: bad table");
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const auto i = static_cast<std::size_t>(it - xs.begin());
  const double x0 = xs[i - 1], x1 = xs[i];
  const double w = (x - x0) / (x1 - x0);
  return ys[i - 1] + w * (ys[i] - ys[i - 1]);
}

double interp_inverse(std::span<const double> xs, std::span<const double> ys, double level) {
  if (xs.empty() || xs.size() != ys.size()) throw std::invalid_argument("interp_inverse: bad table");
  if (level < ys.front() || level > ys.back()) {
    throw std::out_of_range("interp_inverse: level outside curve range");
  }
  // First node whose value reaches the level; flat runs resolve to their left end.
  const auto it = std::lower_bound(ys.begin(), ys.end(), level);
  const auto i = static_cast<std::size_t>(it - ys.begin());
  if (i == 0 || ys[i] == level) return xs[i];
  const double y0 = ys[i - 1], y1 = ys[i];
  const double w = (level - y0) / (y1 - y0);
  return xs[i - 1] + w * (xs[i] - xs[i - 1]);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_max_threads([[maybe_unused]] int n) {
#ifdef _OPENMP
  omp_set_num_threads(n < 1 ? 1 : n);
#endif
}

std::vector<double> geomspace(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("geomspace: need 0 < lo < hi, n >= 2");
  std::vector<double> out(n);
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo * std::exp(step * static_cast<double>(i));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (!(hi > lo) || n < 2) throw std::invalid_argument("linspace: need lo < hi, n >= 2");
  std::vector<double> out(n);
  const double span = hi - lo;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = lo + span * (static_cast<double>(i) / static_cast<double>(n - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

}  // namespace entropic
