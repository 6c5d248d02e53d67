#include "condfilter/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "condfilter/errors.hpp"
#include "condfilter/parallel.hpp"
#include "condfilter/rng.hpp"

namespace condfilter {

namespace {

constexpr std::size_t kRowChunk = 2048;

double sq_l2(const float* row, const double* center, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double diff = static_cast<double>(row[d]) - center[d];
    acc += diff * diff;
  }
  return acc;
}

struct ChunkAccum {
  std::vector<double> sums;        // k * dim
  std::vector<std::size_t> counts; // k
  double inertia = 0.0;
};

// One assignment sweep: nearest center per row (ties to the lower center
// index), per-chunk partial sums merged in chunk order afterwards.
void assignment_pass(const EmbeddingSet& rows, const std::vector<double>& centers,
                     std::size_t k, std::size_t dim,
                     std::vector<std::uint32_t>& assignments,
                     std::vector<double>& row_d2,
                     std::vector<ChunkAccum>* accums) {
  const std::size_t n = rows.count;
  const std::size_t n_chunks = (n + kRowChunk - 1) / kRowChunk;
  if (accums) {
    accums->assign(n_chunks, ChunkAccum{});
  }
  parallel_chunks(n, kRowChunk, [&](std::size_t ci, std::size_t b, std::size_t e) {
    ChunkAccum* acc = accums ? &(*accums)[ci] : nullptr;
    if (acc) {
      acc->sums.assign(k * dim, 0.0);
      acc->counts.assign(k, 0);
    }
    for (std::size_t i = b; i < e; ++i) {
      const float* row = rows.data.data() + i * dim;
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t best_j = 0;
      for (std::size_t j = 0; j < k; ++j) {
        const double d2 = sq_l2(row, centers.data() + j * dim, dim);
        if (d2 < best) {
          best = d2;
          best_j = static_cast<std::uint32_t>(j);
        }
      }
      assignments[i] = best_j;
      row_d2[i] = best;
      if (acc) {
        double* s = acc->sums.data() + best_j * dim;
        for (std::size_t d = 0; d < dim; ++d) s[d] += row[d];
        ++acc->counts[best_j];
        acc->inertia += best;
      }
    }
  });
}

}  // namespace

ClusterModel fit_kmeans(const EmbeddingSet& target, std::size_t k,
                        std::uint64_t seed, const KMeansParams& params) {
  target.validate();
  if (k == 0) throw ArgumentError("fit_kmeans: k must be >= 1");
  if (k > target.count)
    throw ArgumentError("fit_kmeans: k = " + std::to_string(k) +
                        " exceeds row count " + std::to_string(target.count));
  if (params.max_iters < 1) throw ArgumentError("fit_kmeans: max_iters must be >= 1");
  if (params.rel_tol < 0.0) throw ArgumentError("fit_kmeans: rel_tol must be >= 0");

  const std::size_t n = target.count;
  const std::size_t dim = target.dim;

  ClusterModel model;
  model.k = k;
  model.dim = dim;
  model.centers.assign(k * dim, 0.0);

  // k-means++ seeding: first center uniform, later centers proportional to
  // the squared distance to the closest chosen center.
  Rng rng(derive_seed(seed, 0x6b6d7070ULL));  // "kmpp"
  auto set_center = [&](std::size_t j, std::size_t row_idx) {
    const float* row = target.data.data() + row_idx * dim;
    double* c = model.centers.data() + j * dim;
    for (std::size_t d = 0; d < dim; ++d) c[d] = row[d];
  };
  set_center(0, static_cast<std::size_t>(rng.below(n)));

  std::vector<double> d2(n);
  parallel_chunks(n, kRowChunk, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      d2[i] = sq_l2(target.data.data() + i * dim, model.centers.data(), dim);
    }
  });
  for (std::size_t j = 1; j < k; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += d2[i];
    std::size_t pick;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double cum = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum > r) {
          pick = i;
          break;
        }
      }
    } else {
      // Every row coincides with a chosen center; any row works.
      pick = static_cast<std::size_t>(rng.below(n));
    }
    set_center(j, pick);
    const double* cj = model.centers.data() + j * dim;
    parallel_chunks(n, kRowChunk, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const double cand = sq_l2(target.data.data() + i * dim, cj, dim);
        if (cand < d2[i]) d2[i] = cand;
      }
    });
  }

  // Lloyd refinement.
  std::vector<std::uint32_t> assignments(n);
  std::vector<double> row_d2(n);
  std::vector<ChunkAccum> accums;
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);

  bool converged = false;
  for (int iter = 0; iter < params.max_iters; ++iter) {
    assignment_pass(target, model.centers, k, dim, assignments, row_d2, &accums);

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0u);
    double inertia = 0.0;
    for (const auto& acc : accums) {
      for (std::size_t v = 0; v < sums.size(); ++v) sums[v] += acc.sums[v];
      for (std::size_t j = 0; j < k; ++j) counts[j] += acc.counts[j];
      inertia += acc.inertia;
    }
    model.inertia_history.push_back(inertia);
    model.iterations_run = iter + 1;

    if (iter > 0) {
      const double prev = model.inertia_history[model.inertia_history.size() - 2];
      if (prev <= 0.0 || (prev - inertia) < params.rel_tol * prev) {
        model.inertia = inertia;  // centers unchanged since this measurement
        converged = true;
        break;
      }
    }

    // Repair empty clusters before the mean update: promote the row farthest
    // from its center, taken from a cluster that keeps at least one row.
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] > 0) continue;
      double far_d = -1.0;
      std::size_t far_i = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assignments[i]] < 2) continue;
        if (row_d2[i] > far_d) {
          far_d = row_d2[i];
          far_i = i;
        }
      }
      if (far_i == n) continue;  // unreachable while k <= n
      const std::uint32_t old = assignments[far_i];
      const float* row = target.data.data() + far_i * dim;
      double* s_old = sums.data() + old * dim;
      double* s_new = sums.data() + j * dim;
      for (std::size_t d = 0; d < dim; ++d) {
        s_old[d] -= row[d];
        s_new[d] = row[d];
      }
      --counts[old];
      counts[j] = 1;
      assignments[far_i] = static_cast<std::uint32_t>(j);
      row_d2[far_i] = 0.0;
    }

    for (std::size_t j = 0; j < k; ++j) {
      double* c = model.centers.data() + j * dim;
      const double* s = sums.data() + j * dim;
      const double cnt = static_cast<double>(counts[j]);
      for (std::size_t d = 0; d < dim; ++d) c[d] = s[d] / cnt;
    }
  }

  if (!converged) {
    // Ran out of iterations after an update; measure the final objective.
    assignment_pass(target, model.centers, k, dim, assignments, row_d2, &accums);
    double inertia = 0.0;
    for (const auto& acc : accums) inertia += acc.inertia;
    model.inertia = inertia;
    model.inertia_history.push_back(inertia);
  }
  return model;
}

std::vector<std::uint32_t> assign(const ClusterModel& model,
                                  const EmbeddingSet& rows) {
  if (rows.dim != model.dim)
    throw ArgumentError("assign: dimension mismatch (rows " +
                        std::to_string(rows.dim) + ", model " +
                        std::to_string(model.dim) + ")");
  std::vector<std::uint32_t> out(rows.count);
  parallel_chunks(rows.count, kRowChunk,
                  [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const float* row = rows.data.data() + i * model.dim;
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t best_j = 0;
      for (std::size_t j = 0; j < model.k; ++j) {
        const double d2 = sq_l2(row, model.centers.data() + j * model.dim,
                                model.dim);
        if (d2 < best) {
          best = d2;
          best_j = static_cast<std::uint32_t>(j);
        }
      }
      out[i] = best_j;
    }
  });
  return out;
}

EmbeddingSet centers_as_embeddings(const ClusterModel& model) {
  EmbeddingSet set;
  set.count = model.k;
  set.dim = model.dim;
  set.data.resize(model.centers.size());
  for (std::size_t i = 0; i < model.centers.size(); ++i) {
    set.data[i] = static_cast<float>(model.centers[i]);
  }
  set.validate();
  return set;
}

ClusterModel model_from_centers(const EmbeddingSet& centers) {
  centers.validate();
  if (centers.count == 0) throw ArgumentError("model_from_centers: no centers");
  ClusterModel model;
  model.k = centers.count;
  model.dim = centers.dim;
  model.centers.assign(centers.data.begin(), centers.data.end());
  return model;
}

}  // namespace condfilter
