#include <doctest.h>

#include <filesystem>

#include "condfilter/errors.hpp"
#include "condfilter/io.hpp"
#include "condfilter/sequential.hpp"
#include "condfilter/synth.hpp"
#include "../common/proxy_benchmark.hpp"
#include "test_util.hpp"

using namespace condfilter;
using testutil::TempDir;

namespace {

// Throws during the nth train() call.
class FailingTrainer : public Trainer {
 public:
  explicit FailingTrainer(int fail_on_call) : fail_on_(fail_on_call) {}
  TrainerState init() override { return inner_.init(); }
  TrainerState train(TrainerState state, const EmbeddingSet& subset,
                     int epochs) override {
    if (++calls_ == fail_on_) throw DataError("simulated trainer failure");
    return inner_.train(std::move(state), subset, epochs);
  }
  double evaluate(const TrainerState& state,
                  const EmbeddingSet& target) override {
    return inner_.evaluate(state, target);
  }
  std::string name() const override { return "failing"; }

 private:
  MockTrainer inner_;
  int calls_ = 0;
  int fail_on_;
};

struct PlanFixture {
  TempDir dir;
  EmbeddingSet source;
  std::vector<TaskDescriptor> plan;

  explicit PlanFixture(std::size_t tasks, const std::vector<int>& epochs) {
    MixtureSpec src_spec;
    src_spec.dim = 2;
    src_spec.n = 400;
    src_spec.seed = 99;
    src_spec.components = {{{-4.0, 0.0}, 1.0, 0.5}, {{4.0, 0.0}, 1.0, 0.5}};
    source = generate_mixture(src_spec);

    for (std::size_t i = 0; i < tasks; ++i) {
      MixtureSpec tgt_spec;
      tgt_spec.dim = 2;
      tgt_spec.n = 60;
      tgt_spec.seed = 500 + i;
      const double sign = i % 2 == 0 ? 4.0 : -4.0;
      tgt_spec.components = {{{sign, 0.0}, 1.0, 1.0}};
      const EmbeddingSet target = generate_mixture(tgt_spec);
      const std::string path = dir.file("target_" + std::to_string(i) + ".emb");
      save_embeddings(target, path);

      TaskDescriptor task;
      task.task_id = "task" + std::to_string(i);
      task.target_path = path;
      task.arrival_index = i;
      task.method = FilterMethod::cluster_min;
      task.budget = 80;
      task.epochs = epochs[i];
      task.filter.k = 4;
      plan.push_back(task);
    }
  }
};

}  // namespace

TEST_CASE("three-task plan accounts 160 epochs against 300 independent") {
  PlanFixture fix(3, {100, 40, 20});
  MockTrainer trainer;
  const ComparisonReport report =
      compare_independent(fix.plan, fix.source, trainer, 7);
  CHECK(report.total_sequential_epochs == 160);
  CHECK(report.total_independent_epochs == 300);
  CHECK(report.sequential.final_state.cumulative_epochs == 160);
}

TEST_CASE("mock trainer observes the exact chained call order") {
  PlanFixture fix(3, {100, 40, 20});
  MockTrainer trainer;
  const SequentialResult result = run_sequential(fix.plan, fix.source, trainer, 7);

  REQUIRE(result.tasks.size() == 3);
  REQUIRE(trainer.calls().size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    // FIFO completion order and chained states (generation grows by one).
    CHECK(result.tasks[i].task_id == fix.plan[i].task_id);
    CHECK(trainer.calls()[i].generation_before == static_cast<long long>(i));
    CHECK(trainer.calls()[i].epochs == fix.plan[i].epochs);
    CHECK(trainer.calls()[i].subset_digest ==
          take_rows(fix.source, result.tasks[i].selection->selected).digest());
  }
  CHECK(result.tasks[0].cumulative_epochs == 100);
  CHECK(result.tasks[1].cumulative_epochs == 140);
  CHECK(result.tasks[2].cumulative_epochs == 160);

  // History mirrors the run and conserves epochs.
  REQUIRE(result.final_state.history.size() == 3);
  long long total = 0;
  for (const auto& rec : result.final_state.history) total += rec.epochs;
  CHECK(total == result.final_state.cumulative_epochs);
}

TEST_CASE("subset digests are task-conditioned, never stale") {
  PlanFixture fix(2, {100, 40});
  MockTrainer trainer;
  const SequentialResult result = run_sequential(fix.plan, fix.source, trainer, 3);
  REQUIRE(result.tasks.size() == 2);
  // Targets alternate components, so the two subsets must differ.
  CHECK(result.tasks[0].subset_digest != result.tasks[1].subset_digest);
  for (std::size_t i = 0; i < 2; ++i) {
    const EmbeddingSet target = load_embeddings(fix.plan[i].target_path);
    const ScoredSelection expect =
        filter_for_task(fix.plan[i], fix.source, target, 3);
    CHECK(result.tasks[i].subset_digest ==
          digest_subset(fix.source, expect.selected));
  }
}

TEST_CASE("single-task chain equals an independent run") {
  PlanFixture fix(1, {100});
  ProxyTrainer seq_trainer;
  fix.source.labels = std::vector<std::int32_t>(fix.source.count, 0);
  for (std::size_t i = 0; i < fix.source.count; ++i) {
    (*fix.source.labels)[i] = fix.source.row(i)[0] > 0 ? 1 : 0;
  }
  const SequentialResult seq =
      run_sequential(fix.plan, fix.source, seq_trainer, 11);
  REQUIRE(seq.tasks[0].ok);

  ProxyTrainer indep_trainer;
  const EmbeddingSet target = load_embeddings(fix.plan[0].target_path);
  const ScoredSelection sel = filter_for_task(fix.plan[0], fix.source, target, 11);
  TrainerState state = indep_trainer.init();
  state = indep_trainer.train(std::move(state),
                              take_rows(fix.source, sel.selected), 100);
  const double metric = indep_trainer.evaluate(state, target);
  CHECK(seq.tasks[0].metric == metric);
}

TEST_CASE("filter failure skips the task and preserves the chain") {
  PlanFixture fix(3, {100, 40, 20});
  // Entropy filtering needs target labels; none are provided, so task 1 fails.
  fix.plan[1].method = FilterMethod::entropy_active;
  MockTrainer trainer;
  const SequentialResult result = run_sequential(fix.plan, fix.source, trainer, 5);

  REQUIRE(result.tasks.size() == 3);
  CHECK(result.tasks[0].ok);
  CHECK_FALSE(result.tasks[1].ok);
  CHECK_FALSE(result.tasks[1].error.empty());
  CHECK(result.tasks[2].ok);
  CHECK_FALSE(result.aborted);

  // The skipped task contributed no epochs and no training call.
  CHECK(result.final_state.cumulative_epochs == 120);
  REQUIRE(trainer.calls().size() == 2);
  CHECK(trainer.calls()[1].generation_before == 1);
  REQUIRE(result.final_state.history.size() == 2);
  CHECK(result.final_state.history[1].task_id == "task2");
}

TEST_CASE("trainer failure aborts with partial results") {
  PlanFixture fix(3, {100, 40, 20});
  FailingTrainer trainer(2);
  const SequentialResult result = run_sequential(fix.plan, fix.source, trainer, 5);
  CHECK(result.aborted);
  REQUIRE(result.tasks.size() == 2);
  CHECK(result.tasks[0].ok);
  CHECK_FALSE(result.tasks[1].ok);
  CHECK(result.final_state.cumulative_epochs == 100);
}

TEST_CASE("proxy trainer requires a labeled subset") {
  PlanFixture fix(2, {100, 40});
  fix.source.labels.reset();
  ProxyTrainer trainer;
  const SequentialResult result = run_sequential(fix.plan, fix.source, trainer, 5);
  CHECK(result.aborted);
  REQUIRE(result.tasks.size() == 1);
  CHECK_FALSE(result.tasks[0].ok);
  CHECK(result.tasks[0].error.find("labels") != std::string::npos);

  TrainerState fresh = trainer.init();
  const auto target = load_embeddings(fix.plan[0].target_path);
  CHECK_THROWS_AS((void)trainer.evaluate(fresh, target), ArgumentError);
}

TEST_CASE("plan preconditions") {
  PlanFixture fix(2, {100, 40});
  MockTrainer trainer;
  CHECK_THROWS_AS(run_sequential({}, fix.source, trainer, 0), ArgumentError);
  CHECK_THROWS_AS(compare_independent({}, fix.source, trainer, 0), ArgumentError);

  auto bad = fix.plan;
  bad[1].arrival_index = 0;  // not strictly increasing
  CHECK_THROWS_AS(run_sequential(bad, fix.source, trainer, 0), ArgumentError);

  bad = fix.plan;
  bad[0].epochs = 0;
  CHECK_THROWS_AS(run_sequential(bad, fix.source, trainer, 0), ArgumentError);
}

TEST_CASE("sequential epochs never exceed independent when budgets shrink") {
  PlanFixture fix(3, {100, 40, 20});
  MockTrainer trainer;
  const ComparisonReport report =
      compare_independent(fix.plan, fix.source, trainer, 1);
  CHECK(report.total_sequential_epochs <= report.total_independent_epochs);
}

TEST_CASE("conditioned subsets beat random subsets under the proxy trainer") {
  TempDir dir;
  int favorable = 0;
  const int seeds = 6;
  for (int s = 0; s < seeds; ++s) {
    const auto metrics = proxybench::run_paired(dir.path(), 9000 + s);
    favorable += metrics.conditioned > metrics.random ? 1 : 0;
  }
  CHECK(favorable >= seeds - 1);
}

TEST_CASE("plan file parsing") {
  SUBCASE("two tasks with defaults") {
    const std::string text =
        "# demo plan\n"
        "task = cars\n"
        "target = cars.emb\n"
        "method = domain\n"
        "budget = 600\n"
        "\n"
        "task = birds\n"
        "target = birds.emb\n"
        "labels = birds.lbl\n"
        "method = entropy_active\n"
        "budget = 500\n"
        "k = 16\n";
    const auto plan = parse_plan(text);
    REQUIRE(plan.size() == 2);
    CHECK(plan[0].task_id == "cars");
    CHECK(plan[0].method == FilterMethod::domain);
    CHECK(plan[0].epochs == 100);  // default schedule: 100, 40, 20, ...
    CHECK(plan[1].epochs == 40);
    CHECK(plan[1].labels_path == "birds.lbl");
    CHECK(plan[1].filter.k == 16);
    CHECK(plan[1].arrival_index == 1);
  }

  SUBCASE("default epoch schedule flattens at 20") {
    CHECK(default_sequential_epochs(0) == 100);
    CHECK(default_sequential_epochs(1) == 40);
    CHECK(default_sequential_epochs(2) == 20);
    CHECK(default_sequential_epochs(9) == 20);
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(parse_plan(""), FormatError);
    CHECK_THROWS_AS(parse_plan("task = a\nbudget = 5\n"), FormatError);
    CHECK_THROWS_AS(parse_plan("task = a\ntarget = t.emb\nbudget = 5\nnope = 1\n"),
                    FormatError);
    CHECK_THROWS_AS(parse_plan("target = t.emb\n"), FormatError);
  }
}
