#include "condfilter/embedding_set.hpp"

#include <cmath>

#include "condfilter/digest.hpp"
#include "condfilter/errors.hpp"

namespace condfilter {

void EmbeddingSet::validate() const {
  if (dim == 0) throw ArgumentError("embedding set: dim must be positive");
  if (data.size() != count * dim) {
    throw ArgumentError("embedding set: data length " +
                        std::to_string(data.size()) + " != count*dim " +
                        std::to_string(count * dim));
  }
  if (labels && labels->size() != count) {
    throw ArgumentError("embedding set: labels length " +
                        std::to_string(labels->size()) + " != count " +
                        std::to_string(count));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw DataError("embedding set: non-finite value at flat index " +
                      std::to_string(i));
    }
  }
}

std::string EmbeddingSet::digest() const {
  Digest d;
  const std::uint64_t c = count, k = dim;
  d.update_value(c).update_value(k);
  d.update(data.data(), data.size() * sizeof(float));
  if (labels) {
    d.update("L", 1);
    d.update(labels->data(), labels->size() * sizeof(std::int32_t));
  }
  return d.hex();
}

EmbeddingSet make_embedding_set(std::size_t count, std::size_t dim,
                                std::vector<float> data,
                                std::optional<std::vector<std::int32_t>> labels) {
  EmbeddingSet set;
  set.count = count;
  set.dim = dim;
  set.data = std::move(data);
  set.labels = std::move(labels);
  set.validate();
  return set;
}

EmbeddingSet take_rows(const EmbeddingSet& set,
                       std::span<const std::uint32_t> rows) {
  EmbeddingSet out;
  out.count = rows.size();
  out.dim = set.dim;
  out.data.reserve(rows.size() * set.dim);
  for (std::uint32_t r : rows) {
    if (r >= set.count) throw ArgumentError("take_rows: row index out of range");
    const auto src = set.row(r);
    out.data.insert(out.data.end(), src.begin(), src.end());
  }
  if (set.labels) {
    std::vector<std::int32_t> lab;
    lab.reserve(rows.size());
    for (std::uint32_t r : rows) lab.push_back((*set.labels)[r]);
    out.labels = std::move(lab);
  }
  return out;
}

}  // namespace condfilter
