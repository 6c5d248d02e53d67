#include "condfilter/cost_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "condfilter/errors.hpp"
#include "condfilter/io.hpp"

namespace condfilter {

namespace {

double compute_term(long long images, long long epochs, int resolution,
                    int reference) {
  const double scale = static_cast<double>(resolution) /
                       static_cast<double>(reference);
  return static_cast<double>(images) * static_cast<double>(epochs) * scale *
         scale;
}

}  // namespace

void CostProfile::validate() const {
  if (!(throughput_coeff > 0.0))
    throw ArgumentError("cost profile: throughput_coeff must be > 0");
  if (fixed_overhead_hours < 0.0)
    throw ArgumentError("cost profile: fixed_overhead_hours must be >= 0");
  if (reference_resolution <= 0)
    throw ArgumentError("cost profile: reference_resolution must be > 0");
}

CostEstimate estimate_cost(long long images, long long epochs, int resolution,
                           const CostProfile& profile) {
  profile.validate();
  if (images <= 0) throw ArgumentError("estimate_cost: images must be > 0");
  if (epochs <= 0) throw ArgumentError("estimate_cost: epochs must be > 0");
  if (resolution <= 0) throw ArgumentError("estimate_cost: resolution must be > 0");

  CostEstimate est;
  est.off_grid_resolution = resolution != 112 && resolution != 224;
  est.hours = profile.fixed_overhead_hours +
              profile.throughput_coeff *
                  compute_term(images, epochs, resolution,
                               profile.reference_resolution);
  return est;
}

CalibrationResult calibrate(const std::vector<CostObservation>& observations) {
  if (observations.size() < 2)
    throw CalibrationError("calibrate: need at least two observations");
  const int reference = 224;
  std::vector<double> x(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& o = observations[i];
    if (o.images <= 0 || o.epochs <= 0 || o.resolution <= 0)
      throw ArgumentError("calibrate: nonpositive observation field");
    if (!(o.hours >= 0.0) || !std::isfinite(o.hours))
      throw ArgumentError("calibrate: bad observed hours");
    x[i] = compute_term(o.images, o.epochs, o.resolution, reference);
  }

  // Normal equations for hours = overhead + coeff * x.
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sxx = 0.0, sy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sxx += x[i] * x[i];
    sy += observations[i].hours;
    sxy += x[i] * observations[i].hours;
  }
  const double det = n * sxx - sx * sx;
  // Rank-deficient when every observation has the same compute term.
  if (!(det > 1e-12 * n * sxx)) {
    throw CalibrationError(
        "calibrate: observations do not span distinct compute terms");
  }

  CalibrationResult result;
  double coeff = (n * sxy - sx * sy) / det;
  double overhead = (sy - coeff * sx) / n;
  if (overhead < 0.0) {
    // Constrained re-fit with overhead pinned at zero.
    overhead = 0.0;
    coeff = sxy / sxx;
  }
  if (!(coeff > 0.0)) {
    throw CalibrationError("calibrate: fitted throughput is not positive");
  }
  result.profile.throughput_coeff = coeff;
  result.profile.fixed_overhead_hours = overhead;
  result.profile.reference_resolution = reference;

  result.residuals.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double pred = overhead + coeff * x[i];
    result.residuals[i] = observations[i].hours - pred;
    result.max_abs_residual =
        std::max(result.max_abs_residual, std::abs(result.residuals[i]));
  }
  return result;
}

std::string format_cost_profile(const CostProfile& profile) {
  profile.validate();
  std::ostringstream out;
  out << "throughput_coeff = " << format_double(profile.throughput_coeff) << '\n';
  out << "fixed_overhead_hours = " << format_double(profile.fixed_overhead_hours)
      << '\n';
  out << "reference_resolution = " << profile.reference_resolution << '\n';
  return std::move(out).str();
}

CostProfile parse_cost_profile(const std::string& text) {
  CostProfile profile;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto strip = [](std::string& s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.erase(s.begin());
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.pop_back();
    };
    strip(key);
    strip(value);
    if (key == "throughput_coeff") {
      profile.throughput_coeff = parse_double(value);
    } else if (key == "fixed_overhead_hours") {
      profile.fixed_overhead_hours = parse_double(value);
    } else if (key == "reference_resolution") {
      profile.reference_resolution = std::stoi(value);
    }
  }
  profile.validate();
  return profile;
}

void save_cost_profile(const CostProfile& profile, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << format_cost_profile(profile);
  if (!out) throw IoError("write failed: " + path);
}

CostProfile load_cost_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cost profile: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_cost_profile(buf.str());
}

std::vector<CostObservation> load_cost_observations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open observations: " + path);
  std::vector<CostObservation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first[0] == '#') continue;
    CostObservation obs;
    obs.images = std::stoll(first);
    if (!(ls >> obs.epochs >> obs.resolution >> obs.hours)) {
      throw FormatError("observations: expected 'images epochs resolution hours' at line " +
                        std::to_string(line_no));
    }
    out.push_back(obs);
  }
  return out;
}

}  // namespace condfilter
