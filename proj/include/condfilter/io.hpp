#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "condfilter/embedding_set.hpp"
#include "condfilter/selection.hpp"

namespace condfilter {

enum class EmbeddingFormat { binary, csv };

// Binary layout: "EMB1" | u32le count | u32le dim | count*dim f32le.
// CSV rows are comma-separated floats; accepted only up to 4096 columns and
// 10^6 rows. Either path rejects non-finite values.
EmbeddingSet load_embeddings(const std::string& path,
                             EmbeddingFormat format = EmbeddingFormat::binary);
void save_embeddings(const EmbeddingSet& set, const std::string& path);

// Label sidecar: "LBL1" | u32le count | count i32le.
std::vector<std::int32_t> load_labels(const std::string& path);
void save_labels(const std::vector<std::int32_t>& labels,
                 const std::string& path);

// One decimal row index per line, ascending, newline-terminated.
void write_selection(const ScoredSelection& sel, const std::string& path);
std::vector<std::uint32_t> read_selection(const std::string& path);

// Flat key-value run summary. Core keys are emitted in a fixed order;
// extras follow in insertion order so the serialization is canonical.
struct RunReport {
  std::string method;
  long long budget = 0;
  long long selected_count = 0;
  double score_min = 0.0;
  double score_max = 0.0;
  double score_mean = 0.0;
  std::uint64_t seed = 0;
  long long wall_ms = 0;
  std::vector<std::string> input_digests;
  std::vector<std::pair<std::string, std::string>> extras;

  void validate() const;  // score_min <= score_mean <= score_max
};

// Populates the score statistics from the selected rows' scores.
RunReport make_report(const ScoredSelection& sel);

std::string format_report(const RunReport& report);
void write_report(const RunReport& report, const std::string& path);

// Doubles rendered with enough digits to round-trip exactly.
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace condfilter
