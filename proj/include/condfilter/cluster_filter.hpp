#pragma once

#include <cstdint>
#include <vector>

#include "condfilter/embedding_set.hpp"
#include "condfilter/kmeans.hpp"
#include "condfilter/selection.hpp"

namespace condfilter {

enum class AggOp { avg, min };

struct ClusterFilterSpec {
  AggOp agg = AggOp::min;
  int p = 2;  // distance norm, 1 or 2
  std::size_t budget = 0;
  std::uint64_t seed = 0;
};

// Per-row relevance score: the Lp distance from the row to each cluster
// center, aggregated by mean or minimum over centers. Smaller means closer
// to the target distribution.
std::vector<double> score_cluster(const EmbeddingSet& source,
                                  const ClusterModel& model,
                                  const ClusterFilterSpec& spec);

struct ClusterFilterResult {
  ScoredSelection selection;
  ClusterModel model;
  bool budget_clamped = false;
};

// Fits k centers on the target, scores every source row, and keeps the
// budget rows with the smallest aggregate distance.
ClusterFilterResult filter_cluster(const EmbeddingSet& source,
                                   const EmbeddingSet& target,
                                   const ClusterFilterSpec& spec, std::size_t k,
                                   const KMeansParams& kmeans_params = {});

}  // namespace condfilter
