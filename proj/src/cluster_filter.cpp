#include "condfilter/cluster_filter.hpp"

#include <cmath>
#include <limits>

#include "condfilter/errors.hpp"
#include "condfilter/parallel.hpp"

namespace condfilter {

namespace {

constexpr std::size_t kRowChunk = 1024;

}  // namespace

std::vector<double> score_cluster(const EmbeddingSet& source,
                                  const ClusterModel& model,
                                  const ClusterFilterSpec& spec) {
  if (source.dim != model.dim)
    throw ArgumentError("score_cluster: dimension mismatch (source " +
                        std::to_string(source.dim) + ", model " +
                        std::to_string(model.dim) + ")");
  if (spec.p != 1 && spec.p != 2)
    throw ArgumentError("score_cluster: p must be 1 or 2");
  if (model.k == 0) throw ArgumentError("score_cluster: empty model");

  const std::size_t dim = model.dim;
  const std::size_t k = model.k;
  std::vector<double> scores(source.count);

  // Rows are independent, so per-row results do not depend on chunking.
  parallel_chunks(source.count, kRowChunk,
                  [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const float* row = source.data.data() + i * dim;
      if (spec.agg == AggOp::min) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k; ++j) {
          const double* c = model.centers.data() + j * dim;
          double acc = 0.0;
          if (spec.p == 2) {
            for (std::size_t d = 0; d < dim; ++d) {
              const double diff = static_cast<double>(row[d]) - c[d];
              acc += diff * diff;
            }
          } else {
            for (std::size_t d = 0; d < dim; ++d) {
              acc += std::abs(static_cast<double>(row[d]) - c[d]);
            }
          }
          if (acc < best) best = acc;
        }
        scores[i] = spec.p == 2 ? std::sqrt(best) : best;
      } else {
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
          const double* c = model.centers.data() + j * dim;
          double acc = 0.0;
          if (spec.p == 2) {
            for (std::size_t d = 0; d < dim; ++d) {
              const double diff = static_cast<double>(row[d]) - c[d];
              acc += diff * diff;
            }
            sum += std::sqrt(acc);
          } else {
            for (std::size_t d = 0; d < dim; ++d) {
              acc += std::abs(static_cast<double>(row[d]) - c[d]);
            }
            sum += acc;
          }
        }
        scores[i] = sum / static_cast<double>(k);
      }
    }
  });
  return scores;
}

ClusterFilterResult filter_cluster(const EmbeddingSet& source,
                                   const EmbeddingSet& target,
                                   const ClusterFilterSpec& spec, std::size_t k,
                                   const KMeansParams& kmeans_params) {
  if (spec.budget == 0)
    throw ArgumentError("filter_cluster: budget must be >= 1");
  if (source.dim != target.dim)
    throw ArgumentError("filter_cluster: source/target dimension mismatch");

  ClusterFilterResult result;
  result.model = fit_kmeans(target, k, spec.seed, kmeans_params);
  std::vector<double> scores = score_cluster(source, result.model, spec);
  const FilterMethod method = spec.agg == AggOp::avg ? FilterMethod::cluster_avg
                                                     : FilterMethod::cluster_min;
  result.selection =
      make_selection(std::move(scores), spec.budget, SelectionOrder::ascending,
                     method, spec.seed, &result.budget_clamped);
  return result;
}

}  // namespace condfilter
