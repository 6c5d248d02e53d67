#include "condfilter/domain_filter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "condfilter/errors.hpp"
#include "condfilter/io.hpp"
#include "condfilter/parallel.hpp"
#include "condfilter/rng.hpp"

namespace condfilter {

namespace {

constexpr double kProbFloor = 1e-12;

// Draws m distinct indices from [0, n) by partial Fisher-Yates.
std::vector<std::uint32_t> sample_without_replacement(std::size_t n,
                                                      std::size_t m, Rng& rng) {
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  return idx;
}

}  // namespace

void LinearClassifier::validate() const {
  if (dim == 0 || weights.size() != dim || standard.mean.size() != dim ||
      standard.stddev.size() != dim) {
    throw ArgumentError("linear classifier: inconsistent shapes");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(bias)) throw DataError("linear classifier: non-finite bias");
  for (double w : weights)
    if (!finite(w)) throw DataError("linear classifier: non-finite weight");
  for (std::size_t d = 0; d < dim; ++d) {
    if (!finite(standard.mean[d]) || !finite(standard.stddev[d]) ||
        standard.stddev[d] <= 0.0) {
      throw DataError("linear classifier: bad standardization");
    }
  }
}

void DomainTrainConfig::validate() const {
  if (epochs < 1) throw ArgumentError("train config: epochs must be >= 1");
  if (!(learning_rate > 0.0))
    throw ArgumentError("train config: learning_rate must be > 0");
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw ArgumentError("train config: val_fraction must be in (0,1)");
  if (!(accuracy_band.first < accuracy_band.second))
    throw ArgumentError("train config: accuracy band lower must be < upper");
}

DomainDataset build_domain_dataset(const EmbeddingSet& source,
                                   const EmbeddingSet& target,
                                   std::uint64_t seed) {
  if (source.dim != target.dim)
    throw ArgumentError("build_domain_dataset: dimension mismatch");
  if (source.count == 0 || target.count == 0)
    throw ArgumentError("build_domain_dataset: empty input");

  DomainDataset out;
  out.per_label = std::min(source.count, target.count);
  out.clamped = source.count < target.count;
  const std::size_t m = out.per_label;

  Rng rng(derive_seed(seed, 0x73616d70ULL));  // "samp"
  out.source_rows = sample_without_replacement(source.count, m, rng);

  out.rows.count = 2 * m;
  out.rows.dim = source.dim;
  out.rows.data.reserve(2 * m * source.dim);
  for (std::uint32_t r : out.source_rows) {
    const auto row = source.row(r);
    out.rows.data.insert(out.rows.data.end(), row.begin(), row.end());
  }
  for (std::size_t i = 0; i < m; ++i) {
    const auto row = target.row(i);
    out.rows.data.insert(out.rows.data.end(), row.begin(), row.end());
  }
  std::vector<std::int32_t> labels(2 * m, 0);
  std::fill(labels.begin() + static_cast<std::ptrdiff_t>(m), labels.end(), 1);
  out.rows.labels = std::move(labels);
  out.rows.validate();
  return out;
}

DomainTrainResult train_domain_classifier(const DomainDataset& data,
                                          const DomainTrainConfig& cfg) {
  cfg.validate();
  data.rows.validate();
  if (!data.rows.labels) throw ArgumentError("domain training: labels missing");
  const std::size_t m = data.per_label;
  if (m < 2)
    throw ArgumentError("domain training: need >= 2 rows per label to split");

  const std::size_t dim = data.rows.dim;
  const auto& labels = *data.rows.labels;

  // Stratified validation split so both domains appear on both sides.
  std::size_t val_per_label = static_cast<std::size_t>(
      std::llround(cfg.val_fraction * static_cast<double>(m)));
  val_per_label = std::clamp<std::size_t>(val_per_label, 1, m - 1);

  Rng split_rng(derive_seed(cfg.seed, 0x73706c74ULL));  // "splt"
  std::vector<std::uint32_t> train_rows, val_rows;
  for (int label = 0; label <= 1; ++label) {
    std::vector<std::uint32_t> pool(m);
    std::iota(pool.begin(), pool.end(),
              static_cast<std::uint32_t>(label == 0 ? 0 : m));
    for (std::size_t i = 0; i + 1 < pool.size(); ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(split_rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    val_rows.insert(val_rows.end(), pool.begin(),
                    pool.begin() + static_cast<std::ptrdiff_t>(val_per_label));
    train_rows.insert(train_rows.end(),
                      pool.begin() + static_cast<std::ptrdiff_t>(val_per_label),
                      pool.end());
  }

  // Standardization is fit on the combined dataset, not just the train split.
  DomainTrainResult result;
  result.classifier.dim = dim;
  result.classifier.standard = fit_standardizer(data.rows);
  const std::vector<double> X =
      standardized_matrix(data.rows, result.classifier.standard);

  const std::size_t n_train = train_rows.size();
  std::vector<double> Xtr(n_train * dim);
  std::vector<std::int32_t> ytr(n_train);
  for (std::size_t i = 0; i < n_train; ++i) {
    const double* src = X.data() + train_rows[i] * dim;
    std::copy(src, src + dim, Xtr.data() + i * dim);
    ytr[i] = labels[train_rows[i]];
  }

  std::vector<double>& w = result.classifier.weights;
  w.assign(dim, 0.0);
  double& b = result.classifier.bias;
  b = 0.0;

  auto val_accuracy = [&]() {
    std::size_t hits = 0;
    for (std::uint32_t r : val_rows) {
      const double* row = X.data() + r * dim;
      double z = b;
      for (std::size_t d = 0; d < dim; ++d) z += w[d] * row[d];
      const int pred = z >= 0.0 ? 1 : 0;
      hits += pred == labels[r] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(val_rows.size());
  };

  std::vector<double> grad_w(dim);
  double grad_b = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double loss =
        logistic_loss_grad(Xtr, n_train, dim, ytr, w, b, grad_w, grad_b);
    result.loss_history.push_back(loss);
    for (std::size_t d = 0; d < dim; ++d) w[d] -= cfg.learning_rate * grad_w[d];
    b -= cfg.learning_rate * grad_b;
    result.epochs_run = epoch + 1;

    const double acc = val_accuracy();
    result.val_accuracy = acc;
    if (acc >= cfg.accuracy_band.first && acc <= cfg.accuracy_band.second) {
      result.in_band = true;
      break;  // no parameter update after this epoch
    }
  }
  result.loss_history.push_back(logistic_loss(Xtr, n_train, dim, ytr, w, b));
  result.classifier.validate();
  return result;
}

std::vector<double> score_domain(const LinearClassifier& clf,
                                 const EmbeddingSet& source) {
  clf.validate();
  if (source.dim != clf.dim)
    throw ArgumentError("score_domain: dimension mismatch (source " +
                        std::to_string(source.dim) + ", classifier " +
                        std::to_string(clf.dim) + ")");
  std::vector<double> scores(source.count);
  parallel_chunks(source.count, 4096,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const float* row = source.data.data() + i * clf.dim;
      double z = clf.bias;
      for (std::size_t d = 0; d < clf.dim; ++d) {
        z += clf.weights[d] * clf.standard.apply(row[d], d);
      }
      scores[i] = std::clamp(sigmoid(z), kProbFloor, 1.0 - kProbFloor);
    }
  });
  return scores;
}

DomainFilterResult filter_domain(const EmbeddingSet& source,
                                 const EmbeddingSet& target,
                                 const DomainTrainConfig& cfg,
                                 std::size_t budget) {
  if (budget == 0) throw ArgumentError("filter_domain: budget must be >= 1");
  DomainFilterResult result;
  DomainDataset data =
      build_domain_dataset(source, target, derive_seed(cfg.seed, 1));
  result.dataset_clamped = data.clamped;

  DomainTrainConfig train_cfg = cfg;
  train_cfg.seed = derive_seed(cfg.seed, 2);
  DomainTrainResult trained = train_domain_classifier(data, train_cfg);
  result.classifier = std::move(trained.classifier);
  result.val_accuracy = trained.val_accuracy;
  result.in_band = trained.in_band;

  std::vector<double> scores = score_domain(result.classifier, source);
  result.selection =
      make_selection(std::move(scores), budget, SelectionOrder::descending,
                     FilterMethod::domain, cfg.seed, &result.budget_clamped);
  return result;
}

std::string format_linear_classifier(const LinearClassifier& clf) {
  clf.validate();
  std::ostringstream out;
  out << "type = linear\n";
  out << "dim = " << clf.dim << '\n';
  auto vec = [&](const char* key, const std::vector<double>& v) {
    out << key << " =";
    for (double x : v) out << ' ' << format_double(x);
    out << '\n';
  };
  vec("weights", clf.weights);
  out << "bias = " << format_double(clf.bias) << '\n';
  vec("mean", clf.standard.mean);
  vec("stddev", clf.standard.stddev);
  return std::move(out).str();
}

namespace {

std::vector<double> parse_double_list(const std::string& s) {
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_double(tok));
  return out;
}

}  // namespace

LinearClassifier parse_linear_classifier(const std::string& text) {
  LinearClassifier clf;
  std::istringstream in(text);
  std::string line;
  bool typed = false;
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
      if (value != "linear") throw FormatError("classifier: not a linear model");
      typed = true;
    } else if (key == "dim") {
      clf.dim = static_cast<std::size_t>(std::stoull(value));
    } else if (key == "weights") {
      clf.weights = parse_double_list(value);
    } else if (key == "bias") {
      clf.bias = parse_double(value);
    } else if (key == "mean") {
      clf.standard.mean = parse_double_list(value);
    } else if (key == "stddev") {
      clf.standard.stddev = parse_double_list(value);
    }
  }
  if (!typed) throw FormatError("classifier: missing type line");
  clf.validate();
  return clf;
}

void save_linear_classifier(const LinearClassifier& clf,
                            const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << format_linear_classifier(clf);
  if (!out) throw IoError("write failed: " + path);
}

LinearClassifier load_linear_classifier(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open classifier: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_linear_classifier(buf.str());
}

}  // namespace condfilter
