#include "condfilter/entropy_filter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "condfilter/errors.hpp"
#include "condfilter/io.hpp"
#include "condfilter/parallel.hpp"

namespace condfilter {

namespace {

constexpr double kEntropyFloor = 1e-12;

}  // namespace

void SoftmaxClassifier::validate() const {
  if (dim == 0 || classes < 2) {
    throw ArgumentError("softmax classifier: need dim >= 1 and classes >= 2");
  }
  if (weights.size() != classes * dim || biases.size() != classes ||
      standard.mean.size() != dim || standard.stddev.size() != dim) {
    throw ArgumentError("softmax classifier: inconsistent shapes");
  }
  for (double w : weights)
    if (!std::isfinite(w)) throw DataError("softmax classifier: non-finite weight");
  for (double b : biases)
    if (!std::isfinite(b)) throw DataError("softmax classifier: non-finite bias");
}

TargetTrainResult train_target_classifier(const EmbeddingSet& target,
                                          const DomainTrainConfig& cfg) {
  cfg.validate();
  target.validate();
  if (!target.labels)
    throw ArgumentError("train_target_classifier: target labels required");
  if (target.count == 0)
    throw ArgumentError("train_target_classifier: empty target");

  const auto& labels = *target.labels;
  std::int32_t max_label = -1;
  for (std::int32_t l : labels) {
    if (l < 0) throw ArgumentError("train_target_classifier: negative label");
    max_label = std::max(max_label, l);
  }
  const std::size_t classes = static_cast<std::size_t>(max_label) + 1;
  if (classes < 2)
    throw ArgumentError("train_target_classifier: need at least two classes");
  std::vector<std::size_t> per_class(classes, 0);
  for (std::int32_t l : labels) ++per_class[static_cast<std::size_t>(l)];
  for (std::size_t c = 0; c < classes; ++c) {
    if (per_class[c] < 2) {
      throw ArgumentError("train_target_classifier: class " +
                          std::to_string(c) + " has fewer than 2 rows");
    }
  }

  const std::size_t dim = target.dim;
  TargetTrainResult result;
  result.classifier.dim = dim;
  result.classifier.classes = classes;
  result.classifier.standard = fit_standardizer(target);
  result.classifier.weights.assign(classes * dim, 0.0);
  result.classifier.biases.assign(classes, 0.0);

  const std::vector<double> X =
      standardized_matrix(target, result.classifier.standard);

  auto& W = result.classifier.weights;
  auto& b = result.classifier.biases;
  std::vector<double> grad_W(classes * dim);
  std::vector<double> grad_b(classes);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double loss = softmax_loss_grad(X, target.count, dim, labels, classes,
                                          W, b, grad_W, grad_b);
    result.loss_history.push_back(loss);
    for (std::size_t v = 0; v < W.size(); ++v)
      W[v] -= cfg.learning_rate * grad_W[v];
    for (std::size_t c = 0; c < classes; ++c)
      b[c] -= cfg.learning_rate * grad_b[c];
    result.epochs_run = epoch + 1;
  }
  result.loss_history.push_back(
      softmax_loss(X, target.count, dim, labels, classes, W, b));

  std::size_t hits = 0;
  std::vector<double> logits(classes);
  for (std::size_t i = 0; i < target.count; ++i) {
    const double* row = X.data() + i * dim;
    for (std::size_t c = 0; c < classes; ++c) {
      const double* wr = W.data() + c * dim;
      double z = b[c];
      for (std::size_t d = 0; d < dim; ++d) z += wr[d] * row[d];
      logits[c] = z;
    }
    const auto pred = static_cast<std::int32_t>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    hits += pred == labels[i] ? 1 : 0;
  }
  result.train_accuracy =
      static_cast<double>(hits) / static_cast<double>(target.count);
  result.classifier.validate();
  return result;
}

std::vector<double> score_entropy(const SoftmaxClassifier& clf,
                                  const EmbeddingSet& source) {
  clf.validate();
  if (source.dim != clf.dim)
    throw ArgumentError("score_entropy: dimension mismatch (source " +
                        std::to_string(source.dim) + ", classifier " +
                        std::to_string(clf.dim) + ")");
  const std::size_t dim = clf.dim;
  const std::size_t classes = clf.classes;
  std::vector<double> scores(source.count);
  parallel_chunks(source.count, 2048,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<double> logits(classes);
    for (std::size_t i = begin; i < end; ++i) {
      const float* row = source.data.data() + i * dim;
      for (std::size_t c = 0; c < classes; ++c) {
        const double* wr = clf.weights.data() + c * dim;
        double z = clf.biases[c];
        for (std::size_t d = 0; d < dim; ++d) {
          z += wr[d] * clf.standard.apply(row[d], d);
        }
        logits[c] = z;
      }
      softmax_inplace(logits);
      double h = 0.0;
      for (double p : logits) {
        const double q = std::max(p, kEntropyFloor);
        h -= q * std::log(q);
      }
      scores[i] = std::max(h, 0.0);
    }
  });
  return scores;
}

EntropyFilterResult filter_entropy(const EmbeddingSet& source,
                                   const EmbeddingSet& target,
                                   const DomainTrainConfig& cfg,
                                   std::size_t budget, EntropyMode mode) {
  if (budget == 0) throw ArgumentError("filter_entropy: budget must be >= 1");
  if (source.dim != target.dim)
    throw ArgumentError("filter_entropy: source/target dimension mismatch");

  EntropyFilterResult result;
  TargetTrainResult trained = train_target_classifier(target, cfg);
  result.classifier = std::move(trained.classifier);

  std::vector<double> scores = score_entropy(result.classifier, source);
  const bool active = mode == EntropyMode::active;
  result.selection = make_selection(
      std::move(scores), budget,
      active ? SelectionOrder::descending : SelectionOrder::ascending,
      active ? FilterMethod::entropy_active : FilterMethod::entropy_inverse,
      cfg.seed, &result.budget_clamped);
  return result;
}

std::string format_softmax_classifier(const SoftmaxClassifier& clf) {
  clf.validate();
  std::ostringstream out;
  out << "type = softmax\n";
  out << "dim = " << clf.dim << '\n';
  out << "classes = " << clf.classes << '\n';
  auto vec = [&](const std::string& key, std::span<const double> v) {
    out << key << " =";
    for (double x : v) out << ' ' << format_double(x);
    out << '\n';
  };
  for (std::size_t c = 0; c < clf.classes; ++c) {
    vec("weights_" + std::to_string(c),
        {clf.weights.data() + c * clf.dim, clf.dim});
  }
  vec("biases", clf.biases);
  vec("mean", clf.standard.mean);
  vec("stddev", clf.standard.stddev);
  return std::move(out).str();
}

SoftmaxClassifier parse_softmax_classifier(const std::string& text) {
  SoftmaxClassifier clf;
  std::istringstream in(text);
  std::string line;
  bool typed = false;
  std::vector<std::pair<std::size_t, std::vector<double>>> weight_rows;
  auto parse_list = [](const std::string& s) {
    std::istringstream ls(s);
    std::vector<double> out;
    std::string tok;
    while (ls >> tok) out.push_back(parse_double(tok));
    return out;
  };
  while (std::getline(in, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto strip = [](std::string& s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.erase(s.begin());
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.pop_back();
    };
    strip(key);
    strip(value);
    if (key == "type") {
      if (value != "softmax") throw FormatError("classifier: not a softmax model");
      typed = true;
    } else if (key == "dim") {
      clf.dim = static_cast<std::size_t>(std::stoull(value));
    } else if (key == "classes") {
      clf.classes = static_cast<std::size_t>(std::stoull(value));
    } else if (key.rfind("weights_", 0) == 0) {
      weight_rows.emplace_back(std::stoull(key.substr(8)), parse_list(value));
    } else if (key == "biases") {
      clf.biases = parse_list(value);
    } else if (key == "mean") {
      clf.standard.mean = parse_list(value);
    } else if (key == "stddev") {
      clf.standard.stddev = parse_list(value);
    }
  }
  if (!typed) throw FormatError("classifier: missing type line");
  clf.weights.assign(clf.classes * clf.dim, 0.0);
  for (const auto& [c, row] : weight_rows) {
    if (c >= clf.classes || row.size() != clf.dim)
      throw FormatError("classifier: bad weights row");
    std::copy(row.begin(), row.end(), clf.weights.begin() + static_cast<std::ptrdiff_t>(c * clf.dim));
  }
  clf.validate();
  return clf;
}

void save_softmax_classifier(const SoftmaxClassifier& clf,
                             const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << format_softmax_classifier(clf);
  if (!out) throw IoError("write failed: " + path);
}

SoftmaxClassifier load_softmax_classifier(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open classifier: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_softmax_classifier(buf.str());
}

}  // namespace condfilter
