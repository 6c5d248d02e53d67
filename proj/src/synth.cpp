#include "condfilter/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "condfilter/errors.hpp"
#include "condfilter/io.hpp"
#include "condfilter/rng.hpp"

namespace condfilter {

void MixtureSpec::validate() const {
  if (dim == 0) throw ArgumentError("mixture: dim must be positive");
  if (n == 0) throw ArgumentError("mixture: n must be positive");
  if (components.empty()) throw ArgumentError("mixture: no components");
  double sum = 0.0;
  for (const auto& c : components) {
    if (c.mean.size() != dim)
      throw ArgumentError("mixture: component mean has wrong dimension");
    if (!(c.stddev > 0.0)) throw ArgumentError("mixture: stddev must be > 0");
    if (c.weight < 0.0 || !std::isfinite(c.weight))
      throw ArgumentError("mixture: weight must be nonnegative");
    for (double m : c.mean) {
      if (!std::isfinite(m)) throw ArgumentError("mixture: non-finite mean");
    }
    sum += c.weight;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ArgumentError("mixture: weights must sum to 1");
}

EmbeddingSet generate_mixture(const MixtureSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, 0x6d697874ULL));  // "mixt"

  std::vector<double> cumulative;
  cumulative.reserve(spec.components.size());
  double acc = 0.0;
  for (const auto& c : spec.components) {
    acc += c.weight;
    cumulative.push_back(acc);
  }
  cumulative.back() = 1.0;

  EmbeddingSet set;
  set.count = spec.n;
  set.dim = spec.dim;
  set.data.resize(spec.n * spec.dim);
  std::vector<std::int32_t> labels(spec.n);

  for (std::size_t i = 0; i < spec.n; ++i) {
    const double u = rng.uniform();
    std::size_t comp = 0;
    while (comp + 1 < cumulative.size() && u >= cumulative[comp]) ++comp;
    labels[i] = static_cast<std::int32_t>(comp);
    const auto& c = spec.components[comp];
    float* row = set.data.data() + i * spec.dim;
    for (std::size_t d = 0; d < spec.dim; ++d) {
      row[d] = static_cast<float>(c.mean[d] + c.stddev * rng.gaussian());
    }
  }
  set.labels = std::move(labels);
  set.validate();
  return set;
}

namespace {

// Log density of an isotropic Gaussian mixture at x.
double log_mixture_density(const MixtureSpec& spec, std::span<const double> x) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(spec.components.size());
  for (const auto& c : spec.components) {
    if (c.weight <= 0.0) {
      terms.push_back(-std::numeric_limits<double>::infinity());
      continue;
    }
    double sq = 0.0;
    for (std::size_t d = 0; d < spec.dim; ++d) {
      const double diff = x[d] - c.mean[d];
      sq += diff * diff;
    }
    const double var = c.stddev * c.stddev;
    const double log_norm = -0.5 * static_cast<double>(spec.dim) *
                            std::log(2.0 * std::numbers::pi * var);
    const double t = std::log(c.weight) + log_norm - 0.5 * sq / var;
    terms.push_back(t);
    best = std::max(best, t);
  }
  if (!std::isfinite(best)) return best;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - best);
  return best + std::log(sum);
}

}  // namespace

BayesResult bayes_probability(const MixtureSpec& source_spec,
                              const MixtureSpec& target_spec,
                              std::span<const double> x) {
  if (source_spec.dim != target_spec.dim || x.size() != source_spec.dim)
    throw ArgumentError("bayes_probability: dimension mismatch");

  const double log_ps = log_mixture_density(source_spec, x);
  const double log_pt = log_mixture_density(target_spec, x);
  BayesResult out;
  const bool s_dead = !std::isfinite(log_ps) || std::exp(log_ps) == 0.0;
  const bool t_dead = !std::isfinite(log_pt) || std::exp(log_pt) == 0.0;
  if (s_dead && t_dead) {
    // Work in log space before declaring a true double underflow.
    if (std::isfinite(log_ps) || std::isfinite(log_pt)) {
      out.probability = 1.0 / (1.0 + std::exp(log_ps - log_pt));
      if (std::isfinite(out.probability)) return out;
    }
    out.probability = 0.5;
    out.underflow = true;
    return out;
  }
  // p_t / (p_s + p_t) = sigmoid(log_pt - log_ps)
  const double delta = log_pt - log_ps;
  out.probability = delta >= 0.0 ? 1.0 / (1.0 + std::exp(-delta))
                                 : std::exp(delta) / (1.0 + std::exp(delta));
  return out;
}

double brute_force_kmeans(const EmbeddingSet& rows, std::size_t k) {
  rows.validate();
  if (k == 0) throw ArgumentError("brute_force_kmeans: k must be >= 1");
  if (rows.count > 10 || k > 3)
    throw ArgumentError("brute_force_kmeans: instance too large (count <= 10, k <= 3)");
  if (rows.count == 0) throw ArgumentError("brute_force_kmeans: empty input");

  const std::size_t n = rows.count;
  const std::size_t dim = rows.dim;
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= k;

  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> assign(n, 0);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t c = code;
    for (std::size_t i = 0; i < n; ++i) {
      assign[i] = static_cast<std::size_t>(c % k);
      c /= k;
    }
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0u);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = rows.row(i);
      double* s = sums.data() + assign[i] * dim;
      for (std::size_t d = 0; d < dim; ++d) s[d] += row[d];
      ++counts[assign[i]];
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = rows.row(i);
      const double* s = sums.data() + assign[i] * dim;
      const double cnt = static_cast<double>(counts[assign[i]]);
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = row[d] - s[d] / cnt;
        inertia += diff * diff;
      }
    }
    best = std::min(best, inertia);
  }
  return best;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(sep, pos);
    out.push_back(s.substr(pos, next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

MixtureSpec parse_mixture_spec(const std::string& text) {
  MixtureSpec spec;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw FormatError("mixture spec: expected key = value at line " +
                        std::to_string(line_no));
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key == "dim") {
      spec.dim = static_cast<std::size_t>(std::stoull(value));
    } else if (key == "n") {
      spec.n = static_cast<std::size_t>(std::stoull(value));
    } else if (key == "seed") {
      spec.seed = std::stoull(value);
    } else if (key == "component") {
      const auto parts = split(value, '|');
      if (parts.size() != 3)
        throw FormatError("mixture spec: component needs mean | stddev | weight");
      MixtureComponent comp;
      for (const auto& cell : split(trim(parts[0]), ',')) {
        comp.mean.push_back(parse_double(trim(cell)));
      }
      comp.stddev = parse_double(trim(parts[1]));
      comp.weight = parse_double(trim(parts[2]));
      spec.components.push_back(std::move(comp));
    } else {
      throw FormatError("mixture spec: unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

MixtureSpec load_mixture_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mixture spec: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_mixture_spec(buf.str());
}

}  // namespace condfilter
