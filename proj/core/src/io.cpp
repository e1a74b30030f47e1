#include "entropic/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace entropic::io {

namespace {

using nlohmann::json;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  // Next non-blank, non-comment row split on commas.
  bool next(std::vector<std::string>& fields) {
    std::string text;
    while (std::getline(in_, text)) {
      ++line_;
      text = trim(text);
      if (text.empty() || text[0] == '#') continue;
      fields.clear();
      std::size_t start = 0;
      while (true) {
        const auto comma = text.find(',', start);
        fields.push_back(trim(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw FormatError(source_ + ":" + std::to_string(line_) + ": " + message);
  }

  double number(const std::string& field, const std::string& column) const {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && field[0] == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (field.empty() || res.ec != std::errc() || res.ptr != last) {
      fail("column '" + column + "': '" + field + "' is not a number");
    }
    return v;
  }

  std::uint64_t integer(const std::string& field, const std::string& column) const {
    std::uint64_t v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
      fail("column '" + column + "': '" + field + "' is not a non-negative integer");
    }
    return v;
  }

  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

std::vector<std::string> header(CsvReader& csv, const std::string& what) {
  std::vector<std::string> h;
  if (!csv.next(h)) csv.fail("empty " + what + " file");
  return h;
}

void expect_columns(CsvReader& csv, const std::vector<std::string>& row, std::size_t n) {
  if (row.size() != n) {
    csv.fail("expected " + std::to_string(n) + " columns, found " + std::to_string(row.size()));
  }
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(source + ": invalid JSON: " + e.what());
  }
}

template <class T>
T field(const json& j, const char* key, const std::string& source) {
  if (!j.contains(key)) throw FormatError(source + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(source + ": field '" + key + "' has the wrong type: " + e.what());
  }
}

// Rows of a K x D field; a flat list is read as K one-dimensional rows.
std::vector<std::vector<double>> matrix_field(const json& j, const char* key, const std::string& source) {
  if (!j.contains(key)) throw FormatError(source + ": missing field '" + key + "'");
  const auto& v = j.at(key);
  if (!v.is_array()) throw FormatError(source + ": field '" + key + "' must be an array");
  std::vector<std::vector<double>> out;
  for (const auto& row : v) {
    if (row.is_number()) {
      out.push_back({row.get<double>()});
    } else if (row.is_array()) {
      std::vector<double> r;
      for (const auto& x : row) {
        if (!x.is_number()) throw FormatError(source + ": field '" + key + "' must contain numbers");
        r.push_back(x.get<double>());
      }
      out.push_back(std::move(r));
    } else {
      throw FormatError(source + ": field '" + key + "' must contain numbers or arrays");
    }
  }
  return out;
}

}  // namespace

// --- error tables ----------------------------------------------------------

void write_error_table(std::ostream& out, const ErrorTable& table) {
  if (table.spectral()) {
    out << "t,eps2_total";
    for (std::size_t b = 0; b < table.basis_count; ++b) out << ",eps2_b" << b;
  } else {
    out << "t,eps2";
  }
  out << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << format_double(table.times[i]) << ',' << format_double(table.eps2[i]);
    if (table.spectral()) {
      for (double v : table.basis_row(i)) out << ',' << format_double(v);
    }
    out << '\n';
  }
}

ErrorTable read_error_table(std::istream& in, const std::string& source) {
  CsvReader csv(in, source);
  const auto h = header(csv, "error table");
  ErrorTable table;
  table.provenance.method = "imported";
  std::size_t basis = 0;
  if (h.size() == 2 && h[0] == "t" && h[1] == "eps2") {
    basis = 0;
  } else if (h.size() >= 3 && h[0] == "t" && h[1] == "eps2_total") {
    basis = h.size() - 2;
    for (std::size_t b = 0; b < basis; ++b) {
      if (h[b + 2] != "eps2_b" + std::to_string(b)) csv.fail("expected column 'eps2_b" + std::to_string(b) + "'");
    }
  } else {
    csv.fail("header must be 't,eps2' or 't,eps2_total,eps2_b0,...'");
  }
  table.basis_count = basis;
  std::vector<std::string> row;
  while (csv.next(row)) {
    expect_columns(csv, row, h.size());
    const double t = csv.number(row[0], "t");
    const double e = csv.number(row[1], h[1]);
    if (!std::isfinite(t) || !std::isfinite(e)) csv.fail("values must be finite");
    if (e < 0.0) csv.fail("eps2 must be non-negative");
    if (!table.times.empty() && !(t > table.times.back())) csv.fail("times must be strictly increasing");
    table.times.push_back(t);
    table.eps2.push_back(e);
    for (std::size_t b = 0; b < basis; ++b) {
      const double v = csv.number(row[b + 2], h[b + 2]);
      if (!std::isfinite(v) || v < 0.0) csv.fail("per-basis values must be finite and non-negative");
      table.per_basis.push_back(v);
    }
  }
  if (table.times.empty()) csv.fail("no data rows");
  try {
    table.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(source + ": " + e.what());
  }
  return table;
}

ErrorTable read_loss_table(std::istream& in, const DiffusionSpec& spec, const std::string& source) {
  CsvReader csv(in, source);
  const auto h = header(csv, "loss table");
  if (h != std::vector<std::string>{"t", "loss", "lambda"}) csv.fail("header must be 't,loss,lambda'");
  ErrorTable table;
  table.provenance.method = "imported-loss";
  std::vector<std::string> row;
  while (csv.next(row)) {
    expect_columns(csv, row, 3);
    const double t = csv.number(row[0], "t");
    const double loss = csv.number(row[1], "loss");
    const double lambda = csv.number(row[2], "lambda");
    if (!std::isfinite(t) || !std::isfinite(loss) || !std::isfinite(lambda)) csv.fail("values must be finite");
    if (!table.times.empty() && !(t > table.times.back())) csv.fail("times must be strictly increasing");
    if (!spec.contains(t)) csv.fail("time " + format_double(t) + " is outside the process domain");
    if (!(lambda > 0.0)) csv.fail("lambda must be positive");
    if (loss < 0.0) csv.fail("loss must be non-negative");
    const double s = spec.scale(t);
    table.times.push_back(t);
    table.eps2.push_back(loss / (lambda * s * s));
  }
  if (table.times.empty()) csv.fail("no data rows");
  return table;
}

// --- curves ----------------------------------------------------------------

void write_curve(std::ostream& out, const EntropyCurve& curve) {
  out << "t,phi,kind\n";
  const char* kind = to_string(curve.kind());
  for (std::size_t i = 0; i < curve.times().size(); ++i) {
    out << format_double(curve.times()[i]) << ',' << format_double(curve.values()[i]) << ',' << kind << '\n';
  }
}

EntropyCurve read_curve(std::istream& in, const std::string& source) {
  CsvReader csv(in, source);
  const auto h = header(csv, "entropy curve");
  if (h != std::vector<std::string>{"t", "phi", "kind"}) csv.fail("header must be 't,phi,kind'");
  std::vector<double> t, phi;
  std::string kind;
  std::vector<std::string> row;
  while (csv.next(row)) {
    expect_columns(csv, row, 3);
    t.push_back(csv.number(row[0], "t"));
    phi.push_back(csv.number(row[1], "phi"));
    if (kind.empty()) kind = row[2];
    else if (row[2] != kind) csv.fail("mixed curve kinds '" + kind + "' and '" + row[2] + "'");
  }
  try {
    return EntropyCurve(std::move(t), std::move(phi), curve_kind_from_string(kind));
  } catch (const std::invalid_argument& e) {
    throw FormatError(source + ": " + e.what());
  }
}

// --- schedules and distributions --------------------------------------------

std::string schedule_to_json(const Schedule& schedule) {
  json j;
  j["label"] = schedule.label();
  j["times"] = schedule.times();
  j["sigmas"] = schedule.sigmas();
  j["scales"] = schedule.scales();
  return j.dump(2) + "\n";
}

Schedule schedule_from_json(const std::string& text, const std::string& source) {
  const auto j = parse_json(text, source);
  try {
    return Schedule(field<std::string>(j, "label", source), field<std::vector<double>>(j, "times", source),
                    field<std::vector<double>>(j, "sigmas", source), field<std::vector<double>>(j, "scales", source));
  } catch (const std::invalid_argument& e) {
    throw FormatError(source + ": " + e.what());
  }
}

std::string mixture_to_json(const Mixture& dist) {
  json j;
  j["type"] = dist.kind() == MixtureKind::gaussian ? "gaussian_mixture" : "point_mixture";
  j["weights"] = dist.weights();
  json means = json::array(), variances = json::array();
  for (std::size_t k = 0; k < dist.components(); ++k) {
    const auto m = dist.mean(k);
    const auto v = dist.variance(k);
    means.push_back(std::vector<double>(m.begin(), m.end()));
    variances.push_back(std::vector<double>(v.begin(), v.end()));
  }
  j["means"] = means;
  j["variances"] = variances;
  return j.dump(2) + "\n";
}

Mixture mixture_from_json(const std::string& text, const std::string& source) {
  const auto j = parse_json(text, source);
  const auto type = field<std::string>(j, "type", source);
  const auto weights = field<std::vector<double>>(j, "weights", source);
  auto means = matrix_field(j, "means", source);
  try {
    if (type == "gaussian_mixture") return Mixture::gaussian(weights, std::move(means), matrix_field(j, "variances", source));
    if (type == "point_mixture") {
      if (j.contains("variances")) {
        for (const auto& row : matrix_field(j, "variances", source)) {
          for (double v : row) {
            if (v != 0.0) throw FormatError(source + ": point_mixture variances must be zero");
          }
        }
      }
      return Mixture::points(weights, std::move(means));
    }
  } catch (const std::invalid_argument& e) {
    throw FormatError(source + ": " + e.what());
  }
  throw FormatError(source + ": unknown distribution type '" + type + "'");
}

// --- samples ----------------------------------------------------------------

void write_samples(std::ostream& out, const Samples& samples) {
  for (std::size_t d = 0; d < samples.cols(); ++d) out << (d ? "," : "") << 'x' << d;
  out << '\n';
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    const auto r = samples.row(i);
    for (std::size_t d = 0; d < r.size(); ++d) out << (d ? "," : "") << format_double(r[d]);
    out << '\n';
  }
}

Samples read_samples(std::istream& in, const std::string& source) {
  CsvReader csv(in, source);
  const auto h = header(csv, "samples");
  for (std::size_t d = 0; d < h.size(); ++d) {
    if (h[d] != "x" + std::to_string(d)) csv.fail("expected column 'x" + std::to_string(d) + "'");
  }
  std::vector<double> values;
  std::size_t rows = 0;
  std::vector<std::string> row;
  while (csv.next(row)) {
    expect_columns(csv, row, h.size());
    for (std::size_t d = 0; d < h.size(); ++d) {
      const double v = csv.number(row[d], h[d]);
      if (!std::isfinite(v)) csv.fail("samples must be finite");
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) csv.fail("no samples");
  return Samples(rows, h.size(), std::move(values));
}

std::string sidecar_to_json(const SamplesSidecar& s) {
  json j;
  j["seed"] = s.seed;
  j["schedule_label"] = s.schedule_label;
  j["solver"] = s.solver;
  j["paths"] = s.paths;
  j["dim"] = s.dim;
  j["nfe"] = s.nfe;
  j["final_to_mean"] = s.final_to_mean;
  j["config_hash"] = s.config_hash;
  return j.dump(2) + "\n";
}

SamplesSidecar sidecar_from_json(const std::string& text, const std::string& source) {
  const auto j = parse_json(text, source);
  SamplesSidecar s;
  s.seed = field<std::uint64_t>(j, "seed", source);
  s.schedule_label = field<std::string>(j, "schedule_label", source);
  s.solver = field<std::string>(j, "solver", source);
  s.paths = j.value("paths", std::size_t{0});
  s.dim = j.value("dim", std::size_t{0});
  s.nfe = j.value("nfe", std::size_t{0});
  s.final_to_mean = j.value("final_to_mean", true);
  s.config_hash = j.value("config_hash", std::string{});
  return s;
}

// --- KL reports ---------------------------------------------------------------

void write_kl_report(std::ostream& out, const KlReport& report) {
  out << "schedule,solver,nfe,kl_mean,kl_std,repeats,paths,seed\n";
  for (const auto& e : report.entries) {
    out << e.schedule << ',' << to_string(e.solver) << ',' << e.nfe << ',' << format_double(e.kl_mean) << ','
        << format_double(e.kl_std) << ',' << e.repeats << ',' << e.paths << ',' << e.seed << '\n';
  }
}

std::vector<KlEntry> read_kl_report(std::istream& in, const std::string& source) {
  CsvReader csv(in, source);
  const std::vector<std::string> expected{"schedule", "solver", "nfe", "kl_mean", "kl_std", "repeats", "paths", "seed"};
  if (header(csv, "KL report") != expected) csv.fail("header must be 'schedule,solver,nfe,kl_mean,kl_std,repeats,paths,seed'");
  std::vector<KlEntry> out;
  std::vector<std::string> row;
  while (csv.next(row)) {
    expect_columns(csv, row, expected.size());
    KlEntry e;
    e.schedule = row[0];
    try {
      e.solver = solver_kind_from_string(row[1]);
    } catch (const std::invalid_argument& err) {
      csv.fail(err.what());
    }
    e.nfe = csv.integer(row[2], "nfe");
    e.kl_mean = csv.number(row[3], "kl_mean");
    e.kl_std = csv.number(row[4], "kl_std");
    e.repeats = csv.integer(row[5], "repeats");
    e.paths = csv.integer(row[6], "paths");
    e.seed = csv.integer(row[7], "seed");
    out.push_back(std::move(e));
  }
  return out;
}

// --- files --------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace entropic::io
