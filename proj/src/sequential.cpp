#include "condfilter/sequential.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <queue>
#include <sstream>
#include <thread>

#include "condfilter/cluster_filter.hpp"
#include "condfilter/digest.hpp"
#include "condfilter/entropy_filter.hpp"
#include "condfilter/errors.hpp"
#include "condfilter/io.hpp"
#include "condfilter/rng.hpp"

namespace condfilter {

namespace {

// Bounded FIFO channel: producers block when full, the consumer blocks until
// the next task arrives or the channel closes.
template <typename T>
class BlockingQueue {
 public:
  explicit BlockingQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(T item) {
    std::unique_lock<std::mutex> lock(mutex_);
    not_full_.wait(lock, [&] { return queue_.size() < capacity_ || closed_; });
    if (closed_) return;
    queue_.push(std::move(item));
    not_empty_.notify_one();
  }

  std::optional<T> pop() {
    std::unique_lock<std::mutex> lock(mutex_);
    not_empty_.wait(lock, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return std::nullopt;
    T item = std::move(queue_.front());
    queue_.pop();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard<std::mutex> lock(mutex_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::queue<T> queue_;
  std::size_t capacity_;
  bool closed_ = false;
};

struct MockModel {
  long long generation = 0;
};

// Per-class running sums over every subset seen so far.
struct PrototypeModel {
  std::size_t dim = 0;
  std::map<std::int32_t, std::pair<std::vector<double>, long long>> classes;
};

}  // namespace

TrainerState MockTrainer::init() {
  TrainerState state;
  state.model = MockModel{};
  return state;
}

TrainerState MockTrainer::train(TrainerState state, const EmbeddingSet& subset,
                                int epochs) {
  auto& model = std::any_cast<MockModel&>(state.model);
  calls_.push_back(Call{subset.digest(), epochs, model.generation});
  ++model.generation;
  return state;
}

double MockTrainer::evaluate(const TrainerState& state, const EmbeddingSet&) {
  return static_cast<double>(std::any_cast<const MockModel&>(state.model).generation);
}

TrainerState ProxyTrainer::init() {
  TrainerState state;
  state.model = PrototypeModel{};
  return state;
}

TrainerState ProxyTrainer::train(TrainerState state, const EmbeddingSet& subset,
                                 int epochs) {
  if (epochs < 1) throw ArgumentError("proxy trainer: epochs must be >= 1");
  if (!subset.labels)
    throw ArgumentError("proxy trainer: subset labels required");
  subset.validate();
  auto& model = std::any_cast<PrototypeModel&>(state.model);
  if (model.dim == 0) model.dim = subset.dim;
  if (model.dim != subset.dim)
    throw ArgumentError("proxy trainer: subset dimension changed");
  for (std::size_t i = 0; i < subset.count; ++i) {
    auto& entry = model.classes[(*subset.labels)[i]];
    if (entry.first.empty()) entry.first.assign(model.dim, 0.0);
    const auto row = subset.row(i);
    for (std::size_t d = 0; d < model.dim; ++d) entry.first[d] += row[d];
    ++entry.second;
  }
  return state;
}

double ProxyTrainer::evaluate(const TrainerState& state,
                              const EmbeddingSet& target) {
  const auto& model = std::any_cast<const PrototypeModel&>(state.model);
  if (model.classes.empty())
    throw ArgumentError("proxy trainer: evaluate before any training");
  if (target.dim != model.dim)
    throw ArgumentError("proxy trainer: target dimension mismatch");
  if (target.count == 0)
    throw ArgumentError("proxy trainer: empty evaluation target");

  std::vector<std::vector<double>> centroids;
  centroids.reserve(model.classes.size());
  for (const auto& [label, entry] : model.classes) {
    std::vector<double> c(model.dim);
    for (std::size_t d = 0; d < model.dim; ++d) {
      c[d] = entry.first[d] / static_cast<double>(entry.second);
    }
    centroids.push_back(std::move(c));
  }

  double total = 0.0;
  for (std::size_t i = 0; i < target.count; ++i) {
    const auto row = target.row(i);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : centroids) {
      double acc = 0.0;
      for (std::size_t d = 0; d < model.dim; ++d) {
        const double diff = static_cast<double>(row[d]) - c[d];
        acc += diff * diff;
      }
      best = std::min(best, acc);
    }
    total += best;
  }
  return -total / static_cast<double>(target.count);
}

int default_sequential_epochs(std::size_t arrival_index) {
  if (arrival_index == 0) return 100;
  if (arrival_index == 1) return 40;
  return 20;
}

std::string digest_subset(const EmbeddingSet& source,
                          const std::vector<std::uint32_t>& selected) {
  Digest d;
  const std::string src = source.digest();
  d.update(src.data(), src.size());
  d.update(selected.data(), selected.size() * sizeof(std::uint32_t));
  return d.hex();
}

ScoredSelection filter_for_task(const TaskDescriptor& task,
                                const EmbeddingSet& source,
                                const EmbeddingSet& target,
                                std::uint64_t seed) {
  const std::uint64_t task_seed = derive_seed(seed, task.arrival_index);
  switch (task.method) {
    case FilterMethod::cluster_avg:
    case FilterMethod::cluster_min: {
      ClusterFilterSpec spec;
      spec.agg = task.method == FilterMethod::cluster_avg ? AggOp::avg
                                                          : AggOp::min;
      spec.p = task.filter.p;
      spec.budget = task.budget;
      spec.seed = task_seed;
      const std::size_t k = task.filter.k == 0
                                ? std::min<std::size_t>(200, target.count)
                                : task.filter.k;
      return filter_cluster(source, target, spec, k).selection;
    }
    case FilterMethod::domain: {
      DomainTrainConfig cfg = task.filter.train;
      cfg.seed = task_seed;
      return filter_domain(source, target, cfg, task.budget).selection;
    }
    case FilterMethod::entropy_active:
    case FilterMethod::entropy_inverse: {
      DomainTrainConfig cfg = task.filter.train;
      cfg.seed = task_seed;
      const EntropyMode mode = task.method == FilterMethod::entropy_active
                                   ? EntropyMode::active
                                   : EntropyMode::inverse;
      return filter_entropy(source, target, cfg, task.budget, mode).selection;
    }
  }
  throw ArgumentError("filter_for_task: unknown method");
}

namespace {

EmbeddingSet load_task_target(const TaskDescriptor& task) {
  EmbeddingSet target = load_embeddings(task.target_path);
  if (!task.labels_path.empty()) {
    auto labels = load_labels(task.labels_path);
    if (labels.size() != target.count)
      throw LengthError("task " + task.task_id + ": label count mismatch");
    target.labels = std::move(labels);
  }
  return target;
}

}  // namespace

SequentialResult run_sequential(const std::vector<TaskDescriptor>& plan,
                                const EmbeddingSet& source, Trainer& trainer,
                                std::uint64_t seed) {
  if (plan.empty()) throw ArgumentError("run_sequential: empty plan");
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (plan[i].budget == 0)
      throw ArgumentError("run_sequential: task budget must be >= 1");
    if (plan[i].epochs < 1)
      throw ArgumentError("run_sequential: task epochs must be >= 1");
    if (i > 0 && plan[i].arrival_index <= plan[i - 1].arrival_index)
      throw ArgumentError("run_sequential: arrival_index must be strictly increasing");
  }
  source.validate();

  SequentialResult result;
  result.final_state = trainer.init();

  BlockingQueue<TaskDescriptor> queue(4);
  std::thread producer([&] {
    for (const auto& task : plan) queue.push(task);
    queue.close();
  });

  // Single consumer: the model is chained, so no task starts before its
  // predecessor finished training.
  while (auto task = queue.pop()) {
    TaskResult tr;
    tr.task_id = task->task_id;
    tr.epochs = task->epochs;

    EmbeddingSet target;
    std::optional<ScoredSelection> selection;
    try {
      target = load_task_target(*task);
      selection = filter_for_task(*task, source, target, seed);
    } catch (const std::exception& e) {
      // Filter failure skips the task; the chained state is untouched.
      tr.ok = false;
      tr.error = e.what();
      tr.cumulative_epochs = result.final_state.cumulative_epochs;
      result.tasks.push_back(std::move(tr));
      continue;
    }

    try {
      const EmbeddingSet subset = take_rows(source, selection->selected);
      tr.subset_digest = digest_subset(source, selection->selected);
      result.final_state = trainer.train(std::move(result.final_state), subset,
                                         task->epochs);
      result.final_state.cumulative_epochs += task->epochs;
      result.final_state.history.push_back(
          TaskRecord{task->task_id, task->epochs, tr.subset_digest});
      tr.metric = trainer.evaluate(result.final_state, target);
      tr.ok = true;
      tr.selection = std::move(selection);
      tr.cumulative_epochs = result.final_state.cumulative_epochs;
      result.tasks.push_back(std::move(tr));
    } catch (const std::exception& e) {
      tr.ok = false;
      tr.error = e.what();
      result.tasks.push_back(std::move(tr));
      result.aborted = true;
      result.abort_reason = e.what();
      queue.close();
      break;
    }
  }

  producer.join();
  return result;
}

ComparisonReport compare_independent(const std::vector<TaskDescriptor>& plan,
                                     const EmbeddingSet& source,
                                     Trainer& trainer, std::uint64_t seed) {
  if (plan.empty()) throw ArgumentError("compare_independent: empty plan");

  ComparisonReport report;
  report.sequential = run_sequential(plan, source, trainer, seed);

  for (const auto& task : plan) {
    ComparisonRow row;
    row.task_id = task.task_id;
    row.sequential_epochs = task.epochs;
    row.independent_epochs = kDefaultIndependentEpochs;
    report.total_sequential_epochs += task.epochs;
    report.total_independent_epochs += kDefaultIndependentEpochs;

    const auto seq_it =
        std::find_if(report.sequential.tasks.begin(),
                     report.sequential.tasks.end(),
                     [&](const TaskResult& t) { return t.task_id == task.task_id; });
    if (seq_it != report.sequential.tasks.end() && seq_it->ok) {
      row.sequential_metric = seq_it->metric;
    }

    try {
      EmbeddingSet target = load_task_target(task);
      ScoredSelection selection = filter_for_task(task, source, target, seed);
      const EmbeddingSet subset = take_rows(source, selection.selected);
      TrainerState state = trainer.init();
      state = trainer.train(std::move(state), subset, kDefaultIndependentEpochs);
      state.cumulative_epochs += kDefaultIndependentEpochs;
      row.independent_metric = trainer.evaluate(state, target);
      row.ok = seq_it != report.sequential.tasks.end() && seq_it->ok;
    } catch (const std::exception&) {
      row.ok = false;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::vector<TaskDescriptor> parse_plan(const std::string& text) {
  std::vector<TaskDescriptor> plan;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  TaskDescriptor current;
  bool open = false;
  bool epochs_set = false;

  auto finish = [&]() {
    if (!open) return;
    if (current.target_path.empty())
      throw FormatError("plan: task '" + current.task_id + "' missing target");
    if (current.budget == 0)
      throw FormatError("plan: task '" + current.task_id + "' missing budget");
    if (!epochs_set) current.epochs = default_sequential_epochs(plan.size());
    current.arrival_index = plan.size();
    plan.push_back(current);
    open = false;
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = line;
    auto strip = [](std::string& s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.erase(s.begin());
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.pop_back();
    };
    strip(stripped);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw FormatError("plan: expected key = value at line " +
                        std::to_string(line_no));
    std::string key = stripped.substr(0, eq);
    std::string value = stripped.substr(eq + 1);
    strip(key);
    strip(value);

    if (key == "task") {
      finish();
      current = TaskDescriptor{};
      current.task_id = value;
      open = true;
      epochs_set = false;
      continue;
    }
    if (!open)
      throw FormatError("plan: key '" + key + "' before any task at line " +
                        std::to_string(line_no));
    if (key == "target") {
      current.target_path = value;
    } else if (key == "labels") {
      current.labels_path = value;
    } else if (key == "method") {
      current.method = filter_method_from_string(value);
    } else if (key == "budget") {
      current.budget = static_cast<std::size_t>(std::stoull(value));
    } else if (key == "epochs") {
      current.epochs = std::stoi(value);
      epochs_set = true;
    } else if (key == "k") {
      current.filter.k = static_cast<std::size_t>(std::stoull(value));
    } else if (key == "p") {
      current.filter.p = std::stoi(value);
    } else if (key == "train_epochs") {
      current.filter.train.epochs = std::stoi(value);
    } else if (key == "learning_rate") {
      current.filter.train.learning_rate = parse_double(value);
    } else if (key == "val_fraction") {
      current.filter.train.val_fraction = parse_double(value);
    } else {
      throw FormatError("plan: unknown key '" + key + "' at line " +
                        std::to_string(line_no));
    }
  }
  finish();
  if (plan.empty()) throw FormatError("plan: no tasks");
  return plan;
}

std::vector<TaskDescriptor> load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open plan: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_plan(buf.str());
}

}  // namespace condfilter
