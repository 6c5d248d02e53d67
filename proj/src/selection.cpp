#include "condfilter/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "condfilter/errors.hpp"

namespace condfilter {

const char* to_string(FilterMethod m) {
  switch (m) {
    case FilterMethod::cluster_avg: return "cluster_avg";
    case FilterMethod::cluster_min: return "cluster_min";
    case FilterMethod::domain: return "domain";
    case FilterMethod::entropy_active: return "entropy_active";
    case FilterMethod::entropy_inverse: return "entropy_inverse";
  }
  return "unknown";
}

const char* to_string(SelectionOrder o) {
  return o == SelectionOrder::ascending ? "ascending" : "descending";
}

FilterMethod filter_method_from_string(const std::string& s) {
  if (s == "cluster_avg") return FilterMethod::cluster_avg;
  if (s == "cluster_min") return FilterMethod::cluster_min;
  if (s == "domain") return FilterMethod::domain;
  if (s == "entropy_active") return FilterMethod::entropy_active;
  if (s == "entropy_inverse") return FilterMethod::entropy_inverse;
  throw ArgumentError("unknown filter method: " + s);
}

void ScoredSelection::validate() const {
  if (budget == 0) throw ArgumentError("selection: budget must be positive");
  const std::size_t want = std::min(budget, scores.size());
  if (selected.size() != want) {
    throw ArgumentError("selection: selected size " +
                        std::to_string(selected.size()) + " != min(budget, n) " +
                        std::to_string(want));
  }
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (selected[i] >= scores.size())
      throw ArgumentError("selection: index out of range");
    if (i > 0 && selected[i] <= selected[i - 1])
      throw ArgumentError("selection: indices not strictly increasing");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw DataError("selection: non-finite score");
  }

  // No unselected row may strictly beat a selected one; ties go to the
  // lower row index.
  if (!selected.empty() && selected.size() < scores.size()) {
    auto better = [&](std::uint32_t a, std::uint32_t b) {
      if (scores[a] != scores[b]) {
        return order == SelectionOrder::ascending ? scores[a] < scores[b]
                                                  : scores[a] > scores[b];
      }
      return a < b;
    };
    // The worst selected row under the total order.
    std::uint32_t worst = selected[0];
    for (std::uint32_t idx : selected) {
      if (better(worst, idx)) worst = idx;
    }
    std::vector<bool> in_sel(scores.size(), false);
    for (std::uint32_t idx : selected) in_sel[idx] = true;
    for (std::uint32_t j = 0; j < scores.size(); ++j) {
      if (!in_sel[j] && better(j, worst)) {
        throw ArgumentError("selection: unselected row " + std::to_string(j) +
                            " beats selected row " + std::to_string(worst));
      }
    }
  }
}

ScoredSelection make_selection(std::vector<double> scores, std::size_t budget,
                               SelectionOrder order, FilterMethod method,
                               std::uint64_t seed, bool* clamped) {
  if (budget == 0) throw ArgumentError("make_selection: budget must be >= 1");
  for (double s : scores) {
    if (!std::isfinite(s)) throw DataError("make_selection: non-finite score");
  }
  const std::size_t n = scores.size();
  std::size_t take = budget;
  if (take > n) {
    take = n;
    if (clamped) *clamped = true;
  } else if (clamped) {
    *clamped = false;
  }

  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  // (score, index) is a strict total order, so nth_element is deterministic.
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) {
      return order == SelectionOrder::ascending ? scores[a] < scores[b]
                                                : scores[a] > scores[b];
    }
    return a < b;
  };
  if (take < n) {
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take),
                     idx.end(), better);
  }
  idx.resize(take);
  std::sort(idx.begin(), idx.end());

  ScoredSelection sel;
  sel.scores = std::move(scores);
  sel.selected = std::move(idx);
  sel.budget = budget;
  sel.method = method;
  sel.seed = seed;
  sel.order = order;
  return sel;
}

}  // namespace condfilter
