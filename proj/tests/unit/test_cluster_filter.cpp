#include <doctest.h>

#include <algorithm>

#include "condfilter/cluster_filter.hpp"
#include "condfilter/errors.hpp"
#include "condfilter/synth.hpp"
#include "test_util.hpp"

using namespace condfilter;

namespace {

ClusterModel center_model(std::vector<double> centers, std::size_t dim) {
  ClusterModel model;
  model.dim = dim;
  model.k = centers.size() / dim;
  model.centers = std::move(centers);
  return model;
}

struct Benchmark {
  EmbeddingSet source;
  EmbeddingSet target;
};

// Balanced two-component source at +-5 along the first axis; target drawn
// from the +5 component only. Labels record the true component.
Benchmark two_component_benchmark(std::size_t dim, std::uint64_t seed,
                                  std::size_t source_n = 2000,
                                  std::size_t target_n = 500) {
  std::vector<double> lo(dim, 0.0), hi(dim, 0.0);
  lo[0] = -5.0;
  hi[0] = +5.0;
  MixtureSpec src_spec;
  src_spec.dim = dim;
  src_spec.n = source_n;
  src_spec.seed = seed;
  src_spec.components = {{lo, 1.0, 0.5}, {hi, 1.0, 0.5}};
  MixtureSpec tgt_spec;
  tgt_spec.dim = dim;
  tgt_spec.n = target_n;
  tgt_spec.seed = seed + 1;
  tgt_spec.components = {{hi, 1.0, 1.0}};
  return {generate_mixture(src_spec), generate_mixture(tgt_spec)};
}

double selected_purity(const ScoredSelection& sel,
                       const std::vector<std::int32_t>& truth,
                       std::int32_t wanted) {
  std::size_t hits = 0;
  for (std::uint32_t idx : sel.selected) {
    hits += truth[idx] == wanted ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(sel.selected.size());
}

}  // namespace

TEST_CASE("score_cluster hand examples") {
  SUBCASE("avg and min against two centers") {
    const auto model = center_model({0.0, 10.0}, 1);
    const auto row = make_embedding_set(1, 1, {4.0f});
    ClusterFilterSpec spec;
    spec.p = 2;
    spec.budget = 1;
    spec.agg = AggOp::avg;
    CHECK(score_cluster(row, model, spec)[0] == doctest::Approx(5.0));
    spec.agg = AggOp::min;
    CHECK(score_cluster(row, model, spec)[0] == doctest::Approx(4.0));
  }

  SUBCASE("L1 distances to a single center") {
    const auto model = center_model({10.0}, 1);
    const auto rows = make_embedding_set(3, 1, {0, 5, 9});
    ClusterFilterSpec spec;
    spec.p = 1;
    spec.budget = 1;
    spec.agg = AggOp::avg;
    const auto scores = score_cluster(rows, model, spec);
    CHECK(scores[0] == doctest::Approx(10.0));
    CHECK(scores[1] == doctest::Approx(5.0));
    CHECK(scores[2] == doctest::Approx(1.0));
  }

  SUBCASE("single center makes avg equal min") {
    const auto rows = testutil::random_rows(64, 3, 4);
    const auto model = center_model({0.25, -0.5, 0.75}, 3);
    ClusterFilterSpec spec;
    spec.budget = 1;
    spec.p = 2;
    spec.agg = AggOp::avg;
    const auto avg = score_cluster(rows, model, spec);
    spec.agg = AggOp::min;
    const auto mn = score_cluster(rows, model, spec);
    CHECK(avg == mn);
  }

  SUBCASE("dimension mismatch") {
    const auto model = center_model({0.0}, 1);
    const auto rows = testutil::random_rows(2, 3, 4);
    ClusterFilterSpec spec;
    spec.budget = 1;
    CHECK_THROWS_AS(score_cluster(rows, model, spec), ArgumentError);
  }
}

TEST_CASE("filter_cluster hand examples") {
  SUBCASE("bottom budget rows win") {
    const auto source = make_embedding_set(3, 1, {0, 5, 9});
    const auto target = make_embedding_set(4, 1, {10, 10, 10, 10});
    ClusterFilterSpec spec;
    spec.budget = 2;
    spec.p = 2;
    spec.agg = AggOp::min;
    const auto result = filter_cluster(source, target, spec, 1);
    CHECK(result.selection.selected == std::vector<std::uint32_t>{1, 2});
    CHECK_FALSE(result.budget_clamped);
  }

  SUBCASE("full budget selects everything") {
    const auto source = testutil::random_rows(32, 2, 9);
    ClusterFilterSpec spec;
    spec.budget = 32;
    const auto result = filter_cluster(source, source, spec, 4);
    CHECK(result.selection.selected.size() == 32);
  }

  SUBCASE("over budget clamps with a flag") {
    const auto source = testutil::random_rows(8, 2, 9);
    ClusterFilterSpec spec;
    spec.budget = 20;
    const auto result = filter_cluster(source, source, spec, 2);
    CHECK(result.budget_clamped);
    CHECK(result.selection.selected.size() == 8);
  }
}

TEST_CASE("filter_cluster recovers the matching mixture component") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto bench = two_component_benchmark(1, 1000 + seed * 17);
    ClusterFilterSpec spec;
    spec.agg = AggOp::min;
    spec.p = 2;
    spec.budget = 600;
    spec.seed = seed;
    const auto result = filter_cluster(bench.source, bench.target, spec, 8);
    CHECK(selected_purity(result.selection, *bench.source.labels, 1) >= 0.95);
  }
}

TEST_CASE("score_cluster is pointwise") {
  const auto rows = testutil::random_rows(40, 2, 3);
  const auto model = center_model({0.1, 0.2, -0.4, 0.9}, 2);
  ClusterFilterSpec spec;
  spec.budget = 1;
  spec.agg = AggOp::avg;
  const auto base = score_cluster(rows, model, spec);

  // Dropping the second half must leave the first half's scores untouched.
  EmbeddingSet head;
  head.count = 20;
  head.dim = 2;
  head.data.assign(rows.data.begin(), rows.data.begin() + 40);
  const auto head_scores = score_cluster(head, model, spec);
  for (std::size_t i = 0; i < 20; ++i) CHECK(head_scores[i] == base[i]);
}

TEST_CASE("uniform power-of-two scaling keeps the selected set") {
  const auto bench = two_component_benchmark(2, 404, 300, 80);
  ClusterFilterSpec spec;
  spec.agg = AggOp::min;
  spec.p = 2;
  spec.budget = 90;
  spec.seed = 5;
  const auto base = filter_cluster(bench.source, bench.target, spec, 4);

  EmbeddingSet src = bench.source, tgt = bench.target;
  for (auto& v : src.data) v *= 4.0f;
  for (auto& v : tgt.data) v *= 4.0f;
  const auto scaled = filter_cluster(src, tgt, spec, 4);
  CHECK(base.selection.selected == scaled.selection.selected);
}

TEST_CASE("scores are permutation equivariant") {
  const auto rows = testutil::random_rows(50, 3, 8);
  const auto model = center_model({0.0, 0.0, 0.0, 1.0, -1.0, 0.5}, 3);
  ClusterFilterSpec spec;
  spec.budget = 1;
  spec.agg = AggOp::min;
  const auto base = score_cluster(rows, model, spec);

  EmbeddingSet reversed;
  reversed.count = rows.count;
  reversed.dim = rows.dim;
  reversed.data.resize(rows.data.size());
  for (std::size_t i = 0; i < rows.count; ++i) {
    const auto src = rows.row(rows.count - 1 - i);
    std::copy(src.begin(), src.end(), reversed.data.begin() + static_cast<std::ptrdiff_t>(i * rows.dim));
  }
  const auto flipped = score_cluster(reversed, model, spec);
  for (std::size_t i = 0; i < rows.count; ++i) {
    CHECK(flipped[i] == base[rows.count - 1 - i]);
  }
}
