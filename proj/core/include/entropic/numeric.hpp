#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace entropic {

using Rng = std::mt19937_64;

/// Independent random stream keyed by (seed, index, domain).
///
/// Every Monte-Carlo estimator in the library draws from streams built here,
/// one per grid index or per path, so results do not depend on the order in
/// which indices are visited or on the number of worker threads. `domain`
/// separates unrelated consumers sharing a seed (sampling vs. evaluation).
Rng make_stream(std::uint64_t seed, std::uint64_t index, std::uint64_t domain = 0);

/// Stream domains used inside the library.
namespace stream_domain {
inline constexpr std::uint64_t estimation = 0;
inline constexpr std::uint64_t generation = 1;
inline constexpr std::uint64_t evaluation = 2;
inline constexpr std::uint64_t data = 3;
}  // namespace stream_domain

/// Dense row-major matrix of samples: one row per draw or path.
class Samples {
 public:
  Samples() = default;
  Samples(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}
  Samples(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }

  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  friend bool operator==(const Samples&, const Samples&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Fixed-order pairwise summation. Result depends only on the input order.
double pairwise_sum(std::span<const double> values);

/// Mean and standard error of the mean; standard error is 0 for n < 2.
struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};
MeanEstimate mean_and_stderr(std::span<const double> values);

/// log(sum(exp(v))) with max subtraction; -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> values);

/// In-place softmax with max subtraction.
void softmax(std::span<double> logits);

/// Piecewise-linear interpolation on a non-decreasing abscissa.
/// Values outside [xs.front(), xs.back()] are clamped to the end values.
double interp_linear(std::span<const double> xs, std::span<const double> ys, double x);

/// Inverse of a non-decreasing piecewise-linear map given by (xs, ys):
/// returns the smallest x with y(x) = level. Throws std::out_of_range when the
/// level lies outside [ys.front(), ys.back()].
double interp_inverse(std::span<const double> xs, std::span<const double> ys, double level);

/// `n` points spaced geometrically from lo to hi (both > 0), endpoints exact.
std::vector<double> geomspace(double lo, double hi, std::size_t n);

/// Shortest decimal text that parses back to exactly `v` ("nan", "inf", "-inf" otherwise).
std::string format_double(double v);

/// Runs fn(i) for i in [0, n), across OpenMP threads when available. The
/// first exception thrown by any iteration is rethrown on the caller's thread.
/// Callers must make each iteration independent of the others.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(entropic_parallel_for_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

/// Number of worker threads parallel_for may use (1 without OpenMP).
int max_threads();
/// Caps the worker threads used by parallel_for; no-op without OpenMP.
void set_max_threads(int n);

/// `n` points spaced uniformly from lo to hi, endpoints exact.
std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace entropic
