#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "condfilter/embedding_set.hpp"
#include "condfilter/linear_model.hpp"
#include "condfilter/selection.hpp"

namespace condfilter {

// Logistic source-vs-target discriminator in embedding space. The score of
// a source row is its predicted probability of belonging to the target
// domain.
struct LinearClassifier {
  std::size_t dim = 0;
  std::vector<double> weights;
  double bias = 0.0;
  Standardizer standard;

  void validate() const;
};

struct DomainTrainConfig {
  int epochs = 500;
  double learning_rate = 0.1;
  double val_fraction = 0.2;
  // Held-out accuracy band that stops training early; ending outside it is
  // reported as a warning, not an error.
  std::pair<double, double> accuracy_band{0.92, 0.95};
  std::uint64_t seed = 0;

  void validate() const;
};

// Balanced two-domain training set: M sampled source rows labeled 0
// followed by M target rows labeled 1, M = min(source.count, target.count).
struct DomainDataset {
  EmbeddingSet rows;  // labels carried inside rows.labels
  std::vector<std::uint32_t> source_rows;  // which source rows were sampled
  std::size_t per_label = 0;               // M
  bool clamped = false;                    // source was smaller than target
};

DomainDataset build_domain_dataset(const EmbeddingSet& source,
                                   const EmbeddingSet& target,
                                   std::uint64_t seed);

struct DomainTrainResult {
  LinearClassifier classifier;
  double val_accuracy = 0.0;
  bool in_band = false;
  int epochs_run = 0;
  // Training loss measured before each epoch's update plus once after the
  // final update; non-increasing under a sufficiently small step.
  std::vector<double> loss_history;
};

// Full-batch gradient descent on standardized features; stops at the end of
// the first epoch whose held-out accuracy falls inside the band.
DomainTrainResult train_domain_classifier(const DomainDataset& data,
                                          const DomainTrainConfig& cfg);

// Per-row sigmoid(w . standardize(x) + b), clamped into (0, 1).
std::vector<double> score_domain(const LinearClassifier& clf,
                                 const EmbeddingSet& source);

struct DomainFilterResult {
  ScoredSelection selection;
  LinearClassifier classifier;
  double val_accuracy = 0.0;
  bool in_band = false;
  bool budget_clamped = false;
  bool dataset_clamped = false;
};

// Builds the balanced dataset, trains, scores all source rows and keeps the
// budget rows with the highest target-domain probability.
DomainFilterResult filter_domain(const EmbeddingSet& source,
                                 const EmbeddingSet& target,
                                 const DomainTrainConfig& cfg,
                                 std::size_t budget);

// Flat text persistence with full decimal precision.
std::string format_linear_classifier(const LinearClassifier& clf);
LinearClassifier parse_linear_classifier(const std::string& text);
void save_linear_classifier(const LinearClassifier& clf,
                            const std::string& path);
LinearClassifier load_linear_classifier(const std::string& path);

}  // namespace condfilter
