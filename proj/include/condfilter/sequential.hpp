#pragma once

#include <any>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "condfilter/domain_filter.hpp"
#include "condfilter/embedding_set.hpp"
#include "condfilter/selection.hpp"

namespace condfilter {

// Optional per-task knobs for the configured filter.
struct TaskFilterParams {
  std::size_t k = 0;  // cluster count; 0 means min(200, target rows)
  int p = 2;
  DomainTrainConfig train;  // domain / entropy classifier training
};

struct TaskDescriptor {
  std::string task_id;
  std::string target_path;
  std::string labels_path;  // optional; required by the entropy methods
  std::size_t arrival_index = 0;
  FilterMethod method = FilterMethod::cluster_min;
  std::size_t budget = 0;
  int epochs = 0;  // per-task pre-training budget
  TaskFilterParams filter;
};

struct TaskRecord {
  std::string task_id;
  int epochs = 0;
  std::string subset_digest;
};

// Chained model state threaded through the task sequence. The payload is
// trainer-specific; epoch accounting and history are owned by the scheduler
// so cumulative_epochs always equals the sum over history.
struct TrainerState {
  std::any model;
  long long cumulative_epochs = 0;
  std::vector<TaskRecord> history;
};

class Trainer {
 public:
  virtual ~Trainer() = default;
  virtual TrainerState init() = 0;
  virtual TrainerState train(TrainerState state, const EmbeddingSet& subset,
                             int epochs) = 0;
  virtual double evaluate(const TrainerState& state,
                          const EmbeddingSet& target) = 0;
  virtual std::string name() const = 0;
};

// Records calls and bumps a generation counter; trains nothing. For
// contract tests.
class MockTrainer : public Trainer {
 public:
  struct Call {
    std::string subset_digest;
    int epochs = 0;
    long long generation_before = 0;
  };

  TrainerState init() override;
  TrainerState train(TrainerState state, const EmbeddingSet& subset,
                     int epochs) override;
  double evaluate(const TrainerState& state,
                  const EmbeddingSet& target) override;
  std::string name() const override { return "mock"; }

  const std::vector<Call>& calls() const { return calls_; }

 private:
  std::vector<Call> calls_;
};

// Prototype model over embeddings: per-class centroids accumulated across
// tasks. evaluate() returns the negative mean squared distance from target
// rows to their nearest centroid, so better target coverage scores higher.
class ProxyTrainer : public Trainer {
 public:
  TrainerState init() override;
  TrainerState train(TrainerState state, const EmbeddingSet& subset,
                     int epochs) override;
  double evaluate(const TrainerState& state,
                  const EmbeddingSet& target) override;
  std::string name() const override { return "proxy"; }
};

struct TaskResult {
  std::string task_id;
  bool ok = false;
  std::string error;  // set when the filter failed and the task was skipped
  std::optional<ScoredSelection> selection;
  std::string subset_digest;
  int epochs = 0;
  double metric = 0.0;
  long long cumulative_epochs = 0;
};

struct SequentialResult {
  std::vector<TaskResult> tasks;
  TrainerState final_state;
  bool aborted = false;       // trainer failure; tasks holds partial results
  std::string abort_reason;
};

// Processes tasks strictly in arrival order through a bounded blocking
// queue: one consumer owns the chained model, task i trains from task i-1's
// final state. A failed filter skips its task (state unchanged); a trainer
// failure aborts with partial results.
SequentialResult run_sequential(const std::vector<TaskDescriptor>& plan,
                                const EmbeddingSet& source, Trainer& trainer,
                                std::uint64_t seed = 0);

struct ComparisonRow {
  std::string task_id;
  double sequential_metric = 0.0;
  double independent_metric = 0.0;
  int sequential_epochs = 0;
  int independent_epochs = 0;
  bool ok = false;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  long long total_sequential_epochs = 0;
  long long total_independent_epochs = 0;
  SequentialResult sequential;
};

// Every independent run starts from a fresh init() with the default
// per-task budget.
constexpr int kDefaultIndependentEpochs = 100;

ComparisonReport compare_independent(const std::vector<TaskDescriptor>& plan,
                                     const EmbeddingSet& source,
                                     Trainer& trainer, std::uint64_t seed = 0);

// Default shrinking epoch schedule by arrival position: 100, 40, then 20
// for every later task.
int default_sequential_epochs(std::size_t arrival_index);

// Runs the configured filter for one task against an already-loaded target.
ScoredSelection filter_for_task(const TaskDescriptor& task,
                                const EmbeddingSet& source,
                                const EmbeddingSet& target,
                                std::uint64_t seed);

// Plan file: blocks of "key = value" lines, one block per task, started by
// the task key. Unknown keys are rejected.
std::vector<TaskDescriptor> parse_plan(const std::string& text);
std::vector<TaskDescriptor> load_plan(const std::string& path);

std::string digest_subset(const EmbeddingSet& source,
                          const std::vector<std::uint32_t>& selected);

}  // namespace condfilter
