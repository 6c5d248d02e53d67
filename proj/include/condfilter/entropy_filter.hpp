#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "condfilter/domain_filter.hpp"
#include "condfilter/embedding_set.hpp"
#include "condfilter/linear_model.hpp"
#include "condfilter/selection.hpp"

namespace condfilter {

// Multinomial logistic classifier trained on the labeled target set; source
// rows are ranked by the Shannon entropy of its predictions.
struct SoftmaxClassifier {
  std::size_t dim = 0;
  std::size_t classes = 0;   // C >= 2
  std::vector<double> weights;  // classes * dim row-major
  std::vector<double> biases;   // classes
  Standardizer standard;

  void validate() const;
};

struct TargetTrainResult {
  SoftmaxClassifier classifier;
  int epochs_run = 0;
  std::vector<double> loss_history;  // see DomainTrainResult
  double train_accuracy = 0.0;
};

// Full-batch gradient descent on standardized target features. Labels must
// be densely 0..C-1 with at least two rows per class.
TargetTrainResult train_target_classifier(const EmbeddingSet& target,
                                          const DomainTrainConfig& cfg);

// Per-row prediction entropy, in [0, ln C]. Probabilities are floored at
// 1e-12 inside the sum so one-hot outputs give exactly the 0 limit.
std::vector<double> score_entropy(const SoftmaxClassifier& clf,
                                  const EmbeddingSet& source);

enum class EntropyMode { active, inverse };

struct EntropyFilterResult {
  ScoredSelection selection;
  SoftmaxClassifier classifier;
  bool budget_clamped = false;
};

// active keeps the highest-entropy rows, inverse the lowest.
EntropyFilterResult filter_entropy(const EmbeddingSet& source,
                                   const EmbeddingSet& target,
                                   const DomainTrainConfig& cfg,
                                   std::size_t budget, EntropyMode mode);

std::string format_softmax_classifier(const SoftmaxClassifier& clf);
SoftmaxClassifier parse_softmax_classifier(const std::string& text);
void save_softmax_classifier(const SoftmaxClassifier& clf,
                             const std::string& path);
SoftmaxClassifier load_softmax_classifier(const std::string& path);

}  // namespace condfilter
