#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "entropic/analytic.hpp"
#include "entropic/entropy.hpp"
#include "entropic/eval.hpp"
#include "entropic/numeric.hpp"
#include "entropic/process.hpp"
#include "entropic/schedule.hpp"

namespace entropic::io {

/// Malformed input; the message names the source and line when known.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// All numbers are written in shortest round-trip form, so reading a file
// back reproduces every double exactly.

/// `t,eps2`, or `t,eps2_total,eps2_b0,...` for a per-basis table.
void write_error_table(std::ostream& out, const ErrorTable& table);
ErrorTable read_error_table(std::istream& in, const std::string& source = "<input>");

/// Loss table `t,loss,lambda`; eps2 = loss / (lambda s(t)^2).
ErrorTable read_loss_table(std::istream& in, const DiffusionSpec& spec, const std::string& source = "<input>");

/// `t,phi,kind`.
void write_curve(std::ostream& out, const EntropyCurve& curve);
EntropyCurve read_curve(std::istream& in, const std::string& source = "<input>");

/// {label, times, sigmas, scales}, descending.
std::string schedule_to_json(const Schedule& schedule);
Schedule schedule_from_json(const std::string& text, const std::string& source = "<input>");

/// {type: "gaussian_mixture"|"point_mixture", weights, means, variances}.
std::string mixture_to_json(const Mixture& dist);
Mixture mixture_from_json(const std::string& text, const std::string& source = "<input>");

/// Header x0,x1,...; one row per path.
void write_samples(std::ostream& out, const Samples& samples);
Samples read_samples(std::istream& in, const std::string& source = "<input>");

struct SamplesSidecar {
  std::uint64_t seed = 0;
  std::string schedule_label;
  std::string solver;
  std::size_t paths = 0;
  std::size_t dim = 0;
  std::size_t nfe = 0;
  bool final_to_mean = true;
  std::string config_hash;
};
std::string sidecar_to_json(const SamplesSidecar& sidecar);
SamplesSidecar sidecar_from_json(const std::string& text, const std::string& source = "<input>");

/// `schedule,solver,nfe,kl_mean,kl_std,repeats,paths,seed`.
void write_kl_report(std::ostream& out, const KlReport& report);
std::vector<KlEntry> read_kl_report(std::istream& in, const std::string& source = "<input>");

std::string read_file(const std::filesystem::path& path);
/// Writes atomically enough for batch use: to a temporary sibling, then renamed.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace entropic::io
