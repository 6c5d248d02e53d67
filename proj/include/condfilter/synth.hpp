#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "condfilter/embedding_set.hpp"

namespace condfilter {

// Isotropic Gaussian mixture description used by the synthetic benchmarks.
struct MixtureComponent {
  std::vector<double> mean;
  double stddev = 1.0;
  double weight = 1.0;
};

struct MixtureSpec {
  std::vector<MixtureComponent> components;
  std::size_t dim = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

// n seeded draws; labels record the generating component. Component choice
// and per-coordinate Gaussian noise come from one splitmix64 stream in row
// order, so output is bitwise reproducible per (spec, seed).
EmbeddingSet generate_mixture(const MixtureSpec& spec);

struct BayesResult {
  double probability = 0.5;
  bool underflow = false;  // both densities vanished; probability forced to 0.5
};

// Analytic target-domain posterior p_t(x) / (p_s(x) + p_t(x)).
BayesResult bayes_probability(const MixtureSpec& source_spec,
                              const MixtureSpec& target_spec,
                              std::span<const double> x);

// Exhaustive assignment enumeration; the ground-truth floor for k-means
// inertia. Guarded to count <= 10 and k <= 3.
double brute_force_kmeans(const EmbeddingSet& rows, std::size_t k);

// Text form:
//   dim = 2
//   n = 1000
//   seed = 7
//   component = 0,0 | 1.0 | 0.5        (mean | stddev | weight)
MixtureSpec parse_mixture_spec(const std::string& text);
MixtureSpec load_mixture_spec(const std::string& path);

}  // namespace condfilter
