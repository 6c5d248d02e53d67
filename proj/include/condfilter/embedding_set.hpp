#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace condfilter {

// N rows of D-dimensional float32 feature vectors with optional int32
// labels. Immutable after load by convention; safe to share read-only
// across parallel workers.
struct EmbeddingSet {
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<float> data;  // row-major, count * dim
  std::optional<std::vector<std::int32_t>> labels;

  std::span<const float> row(std::size_t i) const {
    return {data.data() + i * dim, dim};
  }

  // Throws ArgumentError / DataError if any structural invariant is broken:
  // data length, label length, finiteness, dim > 0.
  void validate() const;

  // Digest of shape, payload bytes and labels; provenance key for reports.
  std::string digest() const;
};

// Builds a set from rows, validating shape and finiteness.
EmbeddingSet make_embedding_set(std::size_t count, std::size_t dim,
                                std::vector<float> data,
                                std::optional<std::vector<std::int32_t>> labels =
                                    std::nullopt);

// Copies the given rows (and labels, when present) into a new set.
EmbeddingSet take_rows(const EmbeddingSet& set,
                       std::span<const std::uint32_t> rows);

}  // namespace condfilter
