#pragma once

#include <cstdint>
#include <vector>

#include "condfilter/embedding_set.hpp"

namespace condfilter {

struct KMeansParams {
  int max_iters = 100;
  double rel_tol = 1e-4;
};

// K cluster centers over target representations. Immutable after fit.
struct ClusterModel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centers;  // k * dim row-major
  double inertia = 0.0;         // sum of squared L2 distances to nearest center
  int iterations_run = 0;
  std::vector<double> inertia_history;  // objective at the start of each Lloyd step

  std::span<const double> center(std::size_t j) const {
    return {centers.data() + j * dim, dim};
  }
};

// k-means++ seeding followed by Lloyd iterations until the relative inertia
// improvement drops below rel_tol or max_iters is hit. Emptied clusters are
// repaired by promoting the row farthest from its center. Bitwise
// deterministic for fixed (inputs, seed) at any worker count: partial sums
// are merged in fixed chunk order.
ClusterModel fit_kmeans(const EmbeddingSet& target, std::size_t k,
                        std::uint64_t seed, const KMeansParams& params = {});

// Nearest center under L2 per row; ties go to the lower center index.
std::vector<std::uint32_t> assign(const ClusterModel& model,
                                  const EmbeddingSet& rows);

// Centers as float32 rows (EMB1-compatible shape k x dim).
EmbeddingSet centers_as_embeddings(const ClusterModel& model);
ClusterModel model_from_centers(const EmbeddingSet& centers);

}  // namespace condfilter
