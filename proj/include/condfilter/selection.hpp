#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace condfilter {

enum class FilterMethod {
  cluster_avg,
  cluster_min,
  domain,
  entropy_active,
  entropy_inverse,
};

// Sort direction applied to scores when picking the budget. Ascending keeps
// the smallest scores (distance-like), descending the largest
// (probability/entropy-like).
enum class SelectionOrder { ascending, descending };

const char* to_string(FilterMethod m);
const char* to_string(SelectionOrder o);
FilterMethod filter_method_from_string(const std::string& s);

// Per-row scores plus the chosen index set. `selected` is strictly
// increasing and has min(budget, row count) entries; among equal scores the
// lower row index wins.
struct ScoredSelection {
  std::vector<double> scores;
  std::vector<std::uint32_t> selected;
  std::size_t budget = 0;
  FilterMethod method = FilterMethod::cluster_avg;
  std::uint64_t seed = 0;
  SelectionOrder order = SelectionOrder::ascending;

  // Throws if any structural invariant is broken (sortedness, size,
  // optimality of the picked set under the declared order).
  void validate() const;
};

// Picks the best min(budget, n) rows under `order` with deterministic
// index tie-breaking. budget == 0 is an argument error; budget > n clamps
// and reports it through `clamped` when non-null.
ScoredSelection make_selection(std::vector<double> scores, std::size_t budget,
                               SelectionOrder order, FilterMethod method,
                               std::uint64_t seed, bool* clamped = nullptr);

}  // namespace condfilter
