#include "condfilter/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "condfilter/cluster_filter.hpp"
#include "condfilter/cost_model.hpp"
#include "condfilter/digest.hpp"
#include "condfilter/domain_filter.hpp"
#include "condfilter/entropy_filter.hpp"
#include "condfilter/errors.hpp"
#include "condfilter/io.hpp"
#include "condfilter/kmeans.hpp"
#include "condfilter/parallel.hpp"
#include "condfilter/selection.hpp"
#include "condfilter/sequential.hpp"
#include "condfilter/synth.hpp"

namespace condfilter {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct GlobalOpts {
  std::uint64_t seed = 42;
  unsigned threads = 0;  // 0 = machine parallelism
  std::string report_path;
  std::string verbosity = "normal";
};

long long elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() -
                                                               start)
      .count();
}

EmbeddingFormat format_from_string(const std::string& s) {
  if (s == "binary") return EmbeddingFormat::binary;
  if (s == "csv") return EmbeddingFormat::csv;
  throw ArgumentError("unknown embedding format: " + s);
}

struct Logger {
  const GlobalOpts* g = nullptr;
  void info(const std::string& msg) const {
    if (g->verbosity != "quiet") std::cout << msg << '\n';
  }
  void debug(const std::string& msg) const {
    if (g->verbosity == "debug") std::cout << msg << '\n';
  }
};

std::string kv(const char* key, const std::string& value) {
  return std::string(key) + "=" + value;
}

void maybe_write_report(const GlobalOpts& g, RunReport report) {
  if (g.report_path.empty()) return;
  write_report(report, g.report_path);
}

// --- kmeans ---

struct KMeansOpts {
  std::string target_path;
  std::string target_format = "binary";
  std::size_t k = 200;
  int max_iters = 100;
  double rel_tol = 1e-4;
  std::string out_path;
  std::string assign_out;
};

void run_kmeans_cmd(const GlobalOpts& g, const KMeansOpts& o) {
  const auto start = Clock::now();
  Logger log{&g};
  const EmbeddingSet target =
      load_embeddings(o.target_path, format_from_string(o.target_format));
  KMeansParams params{o.max_iters, o.rel_tol};
  const ClusterModel model = fit_kmeans(target, o.k, g.seed, params);
  save_embeddings(centers_as_embeddings(model), o.out_path);
  if (!o.assign_out.empty()) {
    const auto assignment = assign(model, target);
    std::ostringstream buf;
    for (std::uint32_t a : assignment) buf << a << '\n';
    std::ofstream out(o.assign_out, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + o.assign_out);
    out << buf.str();
  }

  RunReport report;
  report.method = "kmeans";
  report.seed = g.seed;
  report.wall_ms = elapsed_ms(start);
  report.input_digests = {digest_file(o.target_path)};
  report.extras = {{"k", std::to_string(model.k)},
                   {"inertia", format_double(model.inertia)},
                   {"iterations_run", std::to_string(model.iterations_run)}};
  maybe_write_report(g, report);
  log.info("kmeans: " + kv("k", std::to_string(model.k)) + " " +
           kv("inertia", format_double(model.inertia)) + " " +
           kv("iterations", std::to_string(model.iterations_run)) + " " +
           kv("out", o.out_path));
}

// --- filter subcommands ---

struct FilterCommonOpts {
  std::string source_path;
  std::string target_path;
  std::string source_format = "binary";
  std::string target_format = "binary";
  std::size_t budget = 0;
  std::string out_path;
};

void finish_filter(const GlobalOpts& g, const FilterCommonOpts& common,
                   const ScoredSelection& sel,
                   std::vector<std::pair<std::string, std::string>> extras,
                   Clock::time_point start) {
  write_selection(sel, common.out_path);
  RunReport report = make_report(sel);
  report.wall_ms = elapsed_ms(start);
  report.input_digests = {digest_file(common.source_path),
                          digest_file(common.target_path)};
  report.extras = std::move(extras);
  maybe_write_report(g, report);
  Logger log{&g};
  log.info(std::string("filter: ") + kv("method", to_string(sel.method)) + " " +
           kv("selected", std::to_string(sel.selected.size())) + " " +
           kv("out", common.out_path));
}

struct FilterClusterOpts {
  FilterCommonOpts common;
  std::size_t k = 200;
  std::string agg = "min";
  int p = 2;
  int max_iters = 100;
  double rel_tol = 1e-4;
  std::string centers_out;
};

void run_filter_cluster(const GlobalOpts& g, const FilterClusterOpts& o) {
  const auto start = Clock::now();
  const EmbeddingSet source =
      load_embeddings(o.common.source_path, format_from_string(o.common.source_format));
  const EmbeddingSet target =
      load_embeddings(o.common.target_path, format_from_string(o.common.target_format));

  ClusterFilterSpec spec;
  if (o.agg == "avg") {
    spec.agg = AggOp::avg;
  } else if (o.agg == "min") {
    spec.agg = AggOp::min;
  } else {
    throw ArgumentError("--agg must be avg or min");
  }
  spec.p = o.p;
  spec.budget = o.common.budget;
  spec.seed = g.seed;

  const ClusterFilterResult result =
      filter_cluster(source, target, spec, o.k, KMeansParams{o.max_iters, o.rel_tol});
  if (!o.centers_out.empty()) {
    save_embeddings(centers_as_embeddings(result.model), o.centers_out);
  }
  std::vector<std::pair<std::string, std::string>> extras = {
      {"k", std::to_string(result.model.k)},
      {"agg", o.agg},
      {"p", std::to_string(o.p)},
      {"inertia", format_double(result.model.inertia)},
  };
  if (result.budget_clamped) extras.emplace_back("budget_clamped", "1");
  finish_filter(g, o.common, result.selection, std::move(extras), start);
}

struct FilterDomainOpts {
  FilterCommonOpts common;
  int epochs = 500;
  double learning_rate = 0.1;
  double val_fraction = 0.2;
  double band_low = 0.92;
  double band_high = 0.95;
  std::string classifier_out;
};

void run_filter_domain(const GlobalOpts& g, const FilterDomainOpts& o) {
  const auto start = Clock::now();
  const EmbeddingSet source =
      load_embeddings(o.common.source_path, format_from_string(o.common.source_format));
  const EmbeddingSet target =
      load_embeddings(o.common.target_path, format_from_string(o.common.target_format));

  DomainTrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.learning_rate;
  cfg.val_fraction = o.val_fraction;
  cfg.accuracy_band = {o.band_low, o.band_high};
  cfg.seed = g.seed;

  const DomainFilterResult result =
      filter_domain(source, target, cfg, o.common.budget);
  if (!o.classifier_out.empty()) {
    save_linear_classifier(result.classifier, o.classifier_out);
  }
  std::vector<std::pair<std::string, std::string>> extras = {
      {"val_accuracy", format_double(result.val_accuracy)},
      {"accuracy_in_band", result.in_band ? "1" : "0"},
  };
  if (result.dataset_clamped) extras.emplace_back("dataset_clamped", "1");
  if (result.budget_clamped) extras.emplace_back("budget_clamped", "1");
  finish_filter(g, o.common, result.selection, std::move(extras), start);
}

struct FilterEntropyOpts {
  FilterCommonOpts common;
  std::string target_labels;
  std::string mode = "active";
  int epochs = 500;
  double learning_rate = 0.1;
  std::string classifier_out;
};

void run_filter_entropy(const GlobalOpts& g, const FilterEntropyOpts& o) {
  const auto start = Clock::now();
  const EmbeddingSet source =
      load_embeddings(o.common.source_path, format_from_string(o.common.source_format));
  EmbeddingSet target =
      load_embeddings(o.common.target_path, format_from_string(o.common.target_format));
  auto labels = load_labels(o.target_labels);
  if (labels.size() != target.count)
    throw LengthError("target labels count does not match target rows");
  target.labels = std::move(labels);

  DomainTrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.learning_rate;
  cfg.seed = g.seed;

  EntropyMode mode;
  if (o.mode == "active") {
    mode = EntropyMode::active;
  } else if (o.mode == "inverse") {
    mode = EntropyMode::inverse;
  } else {
    throw ArgumentError("--mode must be active or inverse");
  }

  const EntropyFilterResult result =
      filter_entropy(source, target, cfg, o.common.budget, mode);
  if (!o.classifier_out.empty()) {
    save_softmax_classifier(result.classifier, o.classifier_out);
  }
  std::vector<std::pair<std::string, std::string>> extras = {
      {"mode", o.mode},
      {"classes", std::to_string(result.classifier.classes)},
  };
  if (result.budget_clamped) extras.emplace_back("budget_clamped", "1");
  finish_filter(g, o.common, result.selection, std::move(extras), start);
}

// --- sequential ---

struct SequentialOpts {
  std::string plan_path;
  std::string source_path;
  std::string source_labels;
  std::string source_format = "binary";
  std::string trainer = "proxy";
  std::string out_dir;
};

std::unique_ptr<Trainer> make_trainer(const std::string& name) {
  if (name == "proxy") return std::make_unique<ProxyTrainer>();
  if (name == "mock") return std::make_unique<MockTrainer>();
  throw ArgumentError("unknown trainer: " + name);
}

EmbeddingSet load_source_with_labels(const SequentialOpts& o) {
  EmbeddingSet source =
      load_embeddings(o.source_path, format_from_string(o.source_format));
  if (!o.source_labels.empty()) {
    auto labels = load_labels(o.source_labels);
    if (labels.size() != source.count)
      throw LengthError("source labels count does not match source rows");
    source.labels = std::move(labels);
  }
  return source;
}

void write_task_artifacts(const fs::path& dir, const TaskResult& task,
                          const std::uint64_t seed) {
  if (task.selection) {
    write_selection(*task.selection, (dir / (task.task_id + ".sel.txt")).string());
    RunReport report = make_report(*task.selection);
    report.seed = seed;
    report.extras = {{"task_id", task.task_id},
                     {"epochs", std::to_string(task.epochs)},
                     {"subset_digest", task.subset_digest},
                     {"metric", format_double(task.metric)},
                     {"cumulative_epochs", std::to_string(task.cumulative_epochs)}};
    write_report(report, (dir / (task.task_id + ".report.txt")).string());
  } else {
    std::ofstream out(dir / (task.task_id + ".report.txt"), std::ios::trunc);
    out << "task_id = " << task.task_id << '\n'
        << "error = " << task.error << '\n';
  }
}

void write_state_summary(const fs::path& dir, const TrainerState& state,
                         const std::string& trainer_name, bool aborted) {
  std::ofstream out(dir / "state.txt", std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + (dir / "state.txt").string());
  Digest d;
  for (const auto& rec : state.history) {
    d.update(rec.task_id.data(), rec.task_id.size());
    d.update_value(rec.epochs);
    d.update(rec.subset_digest.data(), rec.subset_digest.size());
  }
  out << "trainer = " << trainer_name << '\n';
  out << "state_digest = " << d.hex() << '\n';
  out << "cumulative_epochs = " << state.cumulative_epochs << '\n';
  out << "aborted = " << (aborted ? 1 : 0) << '\n';
  for (const auto& rec : state.history) {
    out << "task = " << rec.task_id << " epochs = " << rec.epochs
        << " subset_digest = " << rec.subset_digest << '\n';
  }
}

void run_sequential_cmd(const GlobalOpts& g, const SequentialOpts& o) {
  const auto start = Clock::now();
  Logger log{&g};
  const auto plan = load_plan(o.plan_path);
  const EmbeddingSet source = load_source_with_labels(o);
  auto trainer = make_trainer(o.trainer);
  fs::create_directories(o.out_dir);

  const SequentialResult result = run_sequential(plan, source, *trainer, g.seed);
  for (const auto& task : result.tasks) {
    write_task_artifacts(o.out_dir, task, g.seed);
    if (task.ok) {
      log.info("task " + task.task_id + ": " +
               kv("epochs", std::to_string(task.epochs)) + " " +
               kv("cumulative", std::to_string(task.cumulative_epochs)) + " " +
               kv("metric", format_double(task.metric)));
    } else {
      log.info("task " + task.task_id + ": skipped (" + task.error + ")");
    }
  }
  write_state_summary(o.out_dir, result.final_state, o.trainer, result.aborted);

  RunReport report;
  report.method = "sequential_run";
  report.seed = g.seed;
  report.wall_ms = elapsed_ms(start);
  report.input_digests = {digest_file(o.plan_path), digest_file(o.source_path)};
  report.extras = {
      {"tasks", std::to_string(result.tasks.size())},
      {"cumulative_epochs",
       std::to_string(result.final_state.cumulative_epochs)},
      {"aborted", result.aborted ? "1" : "0"},
  };
  maybe_write_report(g, report);
  if (result.aborted) {
    throw DataError("sequential run aborted: " + result.abort_reason);
  }
}

void run_compare_cmd(const GlobalOpts& g, const SequentialOpts& o) {
  const auto start = Clock::now();
  Logger log{&g};
  const auto plan = load_plan(o.plan_path);
  const EmbeddingSet source = load_source_with_labels(o);
  auto trainer = make_trainer(o.trainer);
  fs::create_directories(o.out_dir);

  const ComparisonReport report = compare_independent(plan, source, *trainer, g.seed);
  std::ostringstream table;
  table << "task sequential_metric independent_metric sequential_epochs "
           "independent_epochs\n";
  for (const auto& row : report.rows) {
    table << row.task_id << ' ' << format_double(row.sequential_metric) << ' '
          << format_double(row.independent_metric) << ' '
          << row.sequential_epochs << ' ' << row.independent_epochs << '\n';
  }
  table << "total_sequential_epochs = " << report.total_sequential_epochs << '\n';
  table << "total_independent_epochs = " << report.total_independent_epochs << '\n';
  std::ofstream out(fs::path(o.out_dir) / "compare.txt", std::ios::trunc);
  if (!out) throw IoError("cannot write comparison table");
  out << table.str();
  log.info(table.str());

  RunReport run_report;
  run_report.method = "sequential_compare";
  run_report.seed = g.seed;
  run_report.wall_ms = elapsed_ms(start);
  run_report.input_digests = {digest_file(o.plan_path),
                              digest_file(o.source_path)};
  run_report.extras = {
      {"total_sequential_epochs",
       std::to_string(report.total_sequential_epochs)},
      {"total_independent_epochs",
       std::to_string(report.total_independent_epochs)},
  };
  maybe_write_report(g, run_report);
}

// --- cost ---

struct CostEstimateOpts {
  long long images = 0;
  long long epochs = 0;
  int resolution = 224;
  std::string profile_path;
  double coeff = 0.0;
  double overhead = -1.0;
  std::string grid;  // comma-separated image counts
};

CostProfile resolve_profile(const CostEstimateOpts& o) {
  if (!o.profile_path.empty()) return load_cost_profile(o.profile_path);
  if (o.coeff > 0.0) {
    CostProfile p;
    p.throughput_coeff = o.coeff;
    p.fixed_overhead_hours = o.overhead < 0.0 ? 0.0 : o.overhead;
    return p;
  }
  throw ArgumentError("cost estimate: give --profile or --coeff");
}

// The estimate table is the command's result, so it prints regardless of
// verbosity.
void run_cost_estimate(const GlobalOpts& g, const CostEstimateOpts& o) {
  const auto start = Clock::now();
  const CostProfile profile = resolve_profile(o);

  std::vector<long long> images_grid;
  if (!o.grid.empty()) {
    std::istringstream in(o.grid);
    std::string cell;
    while (std::getline(in, cell, ',')) images_grid.push_back(std::stoll(cell));
  } else {
    images_grid.push_back(o.images);
  }

  RunReport report;
  report.method = "cost_estimate";
  report.seed = g.seed;
  if (!o.profile_path.empty())
    report.input_digests.push_back(digest_file(o.profile_path));

  std::ostringstream table;
  const bool grid_mode = !o.grid.empty();
  if (grid_mode) table << "images resolution hours\n";
  for (long long images : images_grid) {
    for (int res : grid_mode ? std::vector<int>{112, 224}
                             : std::vector<int>{o.resolution}) {
      const CostEstimate est = estimate_cost(images, o.epochs, res, profile);
      if (grid_mode) {
        table << images << ' ' << res << ' ' << format_double(est.hours) << '\n';
      } else {
        table << "cost: " << kv("images", std::to_string(images)) << ' '
              << kv("epochs", std::to_string(o.epochs)) << ' '
              << kv("resolution", std::to_string(res)) << ' '
              << kv("hours", format_double(est.hours));
        if (est.off_grid_resolution) table << " (warning: uncalibrated resolution)";
        table << '\n';
      }
      report.extras.emplace_back(
          "hours_" + std::to_string(images) + "_" + std::to_string(res),
          format_double(est.hours));
    }
  }
  std::cout << table.str();
  report.wall_ms = elapsed_ms(start);
  maybe_write_report(g, report);
}

struct CostCalibrateOpts {
  std::string observations_path;
  std::string out_path;
};

void run_cost_calibrate(const GlobalOpts& g, const CostCalibrateOpts& o) {
  const auto start = Clock::now();
  Logger log{&g};
  const auto observations = load_cost_observations(o.observations_path);
  const CalibrationResult result = calibrate(observations);
  save_cost_profile(result.profile, o.out_path);
  log.info("calibrated: " +
           kv("throughput_coeff", format_double(result.profile.throughput_coeff)) +
           " " +
           kv("fixed_overhead_hours",
              format_double(result.profile.fixed_overhead_hours)) +
           " " + kv("max_abs_residual", format_double(result.max_abs_residual)));

  RunReport report;
  report.method = "cost_calibrate";
  report.seed = g.seed;
  report.wall_ms = elapsed_ms(start);
  report.input_digests = {digest_file(o.observations_path)};
  report.extras = {
      {"throughput_coeff", format_double(result.profile.throughput_coeff)},
      {"fixed_overhead_hours",
       format_double(result.profile.fixed_overhead_hours)},
      {"max_abs_residual", format_double(result.max_abs_residual)},
  };
  maybe_write_report(g, report);
}

// --- synth ---

struct SynthOpts {
  std::string spec_path;
  std::string out_path;
  std::string labels_out;
};

void run_synth(const GlobalOpts& g, const SynthOpts& o) {
  const auto start = Clock::now();
  Logger log{&g};
  const MixtureSpec spec = load_mixture_spec(o.spec_path);
  const EmbeddingSet set = generate_mixture(spec);
  save_embeddings(set, o.out_path);
  if (!o.labels_out.empty()) save_labels(*set.labels, o.labels_out);
  log.info("synth: " + kv("n", std::to_string(set.count)) + " " +
           kv("dim", std::to_string(set.dim)) + " " + kv("out", o.out_path));

  RunReport report;
  report.method = "synth";
  report.seed = spec.seed;
  report.wall_ms = elapsed_ms(start);
  report.input_digests = {digest_file(o.spec_path)};
  report.extras = {{"n", std::to_string(set.count)},
                   {"dim", std::to_string(set.dim)},
                   {"components", std::to_string(spec.components.size())}};
  maybe_write_report(g, report);
}

void add_common_filter_options(CLI::App* cmd, FilterCommonOpts& common) {
  cmd->add_option("--source", common.source_path, "source embeddings file")
      ->required();
  cmd->add_option("--target", common.target_path, "target embeddings file")
      ->required();
  cmd->add_option("--source-format", common.source_format, "binary|csv")
      ->capture_default_str();
  cmd->add_option("--target-format", common.target_format, "binary|csv")
      ->capture_default_str();
  cmd->add_option("--budget", common.budget, "number of rows to select")
      ->required();
  cmd->add_option("--out", common.out_path, "selection output file")->required();
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  GlobalOpts g;
  CLI::App app{"conditional dataset filtering toolkit"};
  app.require_subcommand(1);
  app.add_option("--seed", g.seed, "global RNG seed")->capture_default_str();
  app.add_option("--threads", g.threads,
                 "worker thread ceiling (default: machine parallelism)")
      ->check(CLI::Range(1u, 1024u));
  app.add_option("--report", g.report_path, "write a run report here");
  app.add_option("--verbosity", g.verbosity, "quiet|normal|debug")
      ->check(CLI::IsMember({"quiet", "normal", "debug"}))
      ->capture_default_str();

  // kmeans
  KMeansOpts ko;
  CLI::App* kmeans_cmd = app.add_subcommand("kmeans", "fit cluster centers");
  kmeans_cmd->add_option("--target", ko.target_path, "target embeddings")->required();
  kmeans_cmd->add_option("--target-format", ko.target_format, "binary|csv")
      ->capture_default_str();
  kmeans_cmd->add_option("--k", ko.k, "cluster count")->capture_default_str();
  kmeans_cmd->add_option("--max-iters", ko.max_iters, "Lloyd iteration cap")
      ->capture_default_str();
  kmeans_cmd->add_option("--rel-tol", ko.rel_tol, "relative inertia tolerance")
      ->capture_default_str();
  kmeans_cmd->add_option("--out", ko.out_path, "centers output (EMB1)")->required();
  kmeans_cmd->add_option("--assign-out", ko.assign_out,
                         "write per-row cluster assignments here");
  kmeans_cmd->callback([&] { run_kmeans_cmd(g, ko); });

  // filter
  CLI::App* filter_cmd = app.add_subcommand("filter", "select a source subset");
  filter_cmd->require_subcommand(1);

  FilterClusterOpts fco;
  CLI::App* fc = filter_cmd->add_subcommand("cluster", "distance-to-centers scoring");
  add_common_filter_options(fc, fco.common);
  fc->add_option("--k", fco.k, "cluster count")->capture_default_str();
  fc->add_option("--agg", fco.agg, "avg|min")->capture_default_str();
  fc->add_option("--p", fco.p, "distance norm (1 or 2)")
      ->check(CLI::IsMember({1, 2}))
      ->capture_default_str();
  fc->add_option("--max-iters", fco.max_iters, "Lloyd iteration cap")
      ->capture_default_str();
  fc->add_option("--rel-tol", fco.rel_tol, "relative inertia tolerance")
      ->capture_default_str();
  fc->add_option("--centers-out", fco.centers_out, "save fitted centers (EMB1)");
  fc->callback([&] { run_filter_cluster(g, fco); });

  FilterDomainOpts fdo;
  CLI::App* fd = filter_cmd->add_subcommand("domain", "domain-classifier scoring");
  add_common_filter_options(fd, fdo.common);
  fd->add_option("--epochs", fdo.epochs, "training epochs")->capture_default_str();
  fd->add_option("--lr", fdo.learning_rate, "learning rate")->capture_default_str();
  fd->add_option("--val-fraction", fdo.val_fraction, "held-out fraction")
      ->capture_default_str();
  fd->add_option("--band-low", fdo.band_low, "early-stop accuracy band lower edge")
      ->capture_default_str();
  fd->add_option("--band-high", fdo.band_high, "early-stop accuracy band upper edge")
      ->capture_default_str();
  fd->add_option("--classifier-out", fdo.classifier_out, "save trained classifier");
  fd->callback([&] { run_filter_domain(g, fdo); });

  FilterEntropyOpts feo;
  CLI::App* fe = filter_cmd->add_subcommand("entropy", "prediction-entropy scoring");
  add_common_filter_options(fe, feo.common);
  fe->add_option("--target-labels", feo.target_labels, "target labels (LBL1)")
      ->required();
  fe->add_option("--mode", feo.mode, "active|inverse")->capture_default_str();
  fe->add_option("--epochs", feo.epochs, "training epochs")->capture_default_str();
  fe->add_option("--lr", feo.learning_rate, "learning rate")->capture_default_str();
  fe->add_option("--classifier-out", feo.classifier_out, "save trained classifier");
  fe->callback([&] { run_filter_entropy(g, feo); });

  // sequential
  SequentialOpts so;
  CLI::App* seq_cmd = app.add_subcommand("sequential", "multi-task pre-training");
  seq_cmd->require_subcommand(1);
  auto add_seq_options = [&](CLI::App* cmd) {
    cmd->add_option("--plan", so.plan_path, "plan file")->required();
    cmd->add_option("--source", so.source_path, "source embeddings")->required();
    cmd->add_option("--source-labels", so.source_labels, "source labels (LBL1)");
    cmd->add_option("--source-format", so.source_format, "binary|csv")
        ->capture_default_str();
    cmd->add_option("--trainer", so.trainer, "proxy|mock")->capture_default_str();
    cmd->add_option("--out-dir", so.out_dir, "artifact directory")->required();
  };
  CLI::App* seq_run = seq_cmd->add_subcommand("run", "run the chained plan");
  add_seq_options(seq_run);
  seq_run->callback([&] { run_sequential_cmd(g, so); });
  CLI::App* seq_cmp = seq_cmd->add_subcommand(
      "compare", "chained vs fresh-start epoch accounting");
  add_seq_options(seq_cmp);
  seq_cmp->callback([&] { run_compare_cmd(g, so); });

  // cost (estimate flags live on the parent too, so `cost --images ...` works)
  CostEstimateOpts ceo;
  CostCalibrateOpts cco;
  CLI::App* cost_cmd = app.add_subcommand("cost", "pre-training cost model");
  auto add_estimate_options = [&](CLI::App* cmd) {
    cmd->add_option("--images", ceo.images, "pre-training image count");
    cmd->add_option("--epochs", ceo.epochs, "pre-training epochs");
    cmd->add_option("--resolution", ceo.resolution, "square image side")
        ->capture_default_str();
    cmd->add_option("--profile", ceo.profile_path, "cost profile file");
    cmd->add_option("--coeff", ceo.coeff, "hours per image-epoch at 224");
    cmd->add_option("--overhead", ceo.overhead, "fixed overhead hours");
    cmd->add_option("--grid", ceo.grid,
                    "comma-separated image counts; prints a 112/224 table");
  };
  add_estimate_options(cost_cmd);
  CLI::App* cost_est = cost_cmd->add_subcommand("estimate", "predict hours");
  add_estimate_options(cost_est);
  cost_est->callback([&] { run_cost_estimate(g, ceo); });
  CLI::App* cost_cal = cost_cmd->add_subcommand("calibrate", "fit a profile");
  cost_cal->add_option("--observations", cco.observations_path,
                       "file of: images epochs resolution hours")
      ->required();
  cost_cal->add_option("--out", cco.out_path, "profile output file")->required();
  cost_cal->callback([&] { run_cost_calibrate(g, cco); });
  cost_cmd->callback([&] {
    if (cost_cmd->get_subcommands().empty()) {
      if (ceo.images <= 0 && ceo.grid.empty())
        throw CLI::RequiredError("cost: --images or --grid (or a subcommand)");
      run_cost_estimate(g, ceo);
    }
  });

  // synth
  SynthOpts syo;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate mixture embeddings");
  synth_cmd->add_option("--spec", syo.spec_path, "mixture spec file")->required();
  synth_cmd->add_option("--out", syo.out_path, "embeddings output (EMB1)")
      ->required();
  synth_cmd->add_option("--labels-out", syo.labels_out, "labels output (LBL1)");
  synth_cmd->callback([&] { run_synth(g, syo); });

  // Global options apply before any callback runs.
  app.parse_complete_callback([&] {
    set_worker_count(g.threads);
    if (g.verbosity == "debug") {
      std::cout << "# effective configuration\n"
                << app.config_to_str(true, false);
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n' << app.help();
    return 1;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const LengthError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const CalibrationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

int dispatch(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  static const char* prog = "condfilter";
  argv.push_back(prog);
  for (const auto& a : args) argv.push_back(a.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace condfilter
