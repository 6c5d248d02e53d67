#include <doctest.h>

#include <fstream>
#include <sstream>

#include "condfilter/cli.hpp"
#include "condfilter/io.hpp"
#include "test_util.hpp"

using namespace condfilter;
using testutil::TempDir;

namespace {

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
}

// Known separable benchmark written as EMB1/LBL1 pairs.
void write_benchmark(const TempDir& dir) {
  write_text(dir.file("source.spec"),
             "dim = 2\n"
             "n = 800\n"
             "seed = 21\n"
             "component = -5,0 | 1.0 | 0.5\n"
             "component = 5,0 | 1.0 | 0.5\n");
  write_text(dir.file("target.spec"),
             "dim = 2\n"
             "n = 200\n"
             "seed = 22\n"
             "component = 5,0 | 1.0 | 1.0\n");
  REQUIRE(dispatch({"synth", "--spec", dir.file("source.spec"), "--out",
                    dir.file("source.emb"), "--labels-out",
                    dir.file("source.lbl")}) == 0);
  REQUIRE(dispatch({"synth", "--spec", dir.file("target.spec"), "--out",
                    dir.file("target.emb"), "--labels-out",
                    dir.file("target.lbl")}) == 0);
}

}  // namespace

TEST_CASE("cli filter cluster end to end") {
  TempDir dir;
  write_benchmark(dir);

  const int rc = dispatch({"--seed", "7", "--verbosity", "quiet",
                           "--report", dir.file("report.txt"),
                           "filter", "cluster",
                           "--source", dir.file("source.emb"),
                           "--target", dir.file("target.emb"),
                           "--k", "8", "--agg", "min", "--p", "2",
                           "--budget", "100",
                           "--out", dir.file("sel.txt")});
  CHECK(rc == 0);
  const auto selected = read_selection(dir.file("sel.txt"));
  CHECK(selected.size() == 100);

  const std::string report = read_bytes(dir.file("report.txt"));
  CHECK(report.find("method = cluster_min") != std::string::npos);
  CHECK(report.find("budget = 100") != std::string::npos);
  CHECK(report.find("seed = 7") != std::string::npos);
  CHECK(report.find("k = 8") != std::string::npos);
}

TEST_CASE("cli selection files are thread-count independent") {
  TempDir dir;
  write_benchmark(dir);
  auto run = [&](const char* threads, const std::string& out) {
    return dispatch({"--seed", "5", "--threads", threads, "--verbosity", "quiet",
                     "filter", "cluster",
                     "--source", dir.file("source.emb"),
                     "--target", dir.file("target.emb"),
                     "--k", "4", "--budget", "150", "--out", out});
  };
  REQUIRE(run("1", dir.file("a.txt")) == 0);
  REQUIRE(run("8", dir.file("b.txt")) == 0);
  CHECK(read_bytes(dir.file("a.txt")) == read_bytes(dir.file("b.txt")));
}

TEST_CASE("cli usage errors exit 1") {
  TempDir dir;
  write_benchmark(dir);
  SUBCASE("missing required budget") {
    CHECK(dispatch({"filter", "cluster", "--source", dir.file("source.emb"),
                    "--target", dir.file("target.emb"),
                    "--out", dir.file("x.txt")}) == 1);
  }
  SUBCASE("unknown subcommand") {
    CHECK(dispatch({"frobnicate"}) == 1);
  }
  SUBCASE("unknown flag") {
    CHECK(dispatch({"synth", "--nope", "x"}) == 1);
  }
}

TEST_CASE("cli data errors exit 2") {
  TempDir dir;
  SUBCASE("missing input file") {
    CHECK(dispatch({"filter", "cluster", "--source", dir.file("absent.emb"),
                    "--target", dir.file("absent.emb"), "--budget", "5",
                    "--out", dir.file("x.txt")}) == 2);
  }
  SUBCASE("budget of zero") {
    write_benchmark(dir);
    CHECK(dispatch({"filter", "cluster", "--source", dir.file("source.emb"),
                    "--target", dir.file("target.emb"), "--budget", "0",
                    "--out", dir.file("x.txt")}) == 2);
  }
}

TEST_CASE("cli filter domain and entropy") {
  TempDir dir;
  write_benchmark(dir);

  CHECK(dispatch({"--verbosity", "quiet", "filter", "domain",
                  "--source", dir.file("source.emb"),
                  "--target", dir.file("target.emb"),
                  "--epochs", "60", "--budget", "120",
                  "--classifier-out", dir.file("clf.txt"),
                  "--out", dir.file("dom.txt")}) == 0);
  CHECK(read_selection(dir.file("dom.txt")).size() == 120);
  CHECK(read_bytes(dir.file("clf.txt")).find("type = linear") == 0);

  CHECK(dispatch({"--verbosity", "quiet", "filter", "entropy",
                  "--source", dir.file("source.emb"),
                  "--target", dir.file("target.emb"),
                  "--target-labels", dir.file("target.lbl"),
                  "--mode", "inverse", "--epochs", "60", "--budget", "50",
                  "--out", dir.file("ent.txt")}) == 2);
  // The benchmark target has a single class, which the entropy method
  // rejects; a two-class target works.
  write_text(dir.file("target2.spec"),
             "dim = 2\n"
             "n = 200\n"
             "seed = 23\n"
             "component = 5,0 | 1.0 | 0.5\n"
             "component = -5,0 | 1.0 | 0.5\n");
  REQUIRE(dispatch({"synth", "--spec", dir.file("target2.spec"), "--out",
                    dir.file("target2.emb"), "--labels-out",
                    dir.file("target2.lbl")}) == 0);
  CHECK(dispatch({"--verbosity", "quiet", "filter", "entropy",
                  "--source", dir.file("source.emb"),
                  "--target", dir.file("target2.emb"),
                  "--target-labels", dir.file("target2.lbl"),
                  "--mode", "inverse", "--epochs", "60", "--budget", "50",
                  "--out", dir.file("ent.txt")}) == 0);
  CHECK(read_selection(dir.file("ent.txt")).size() == 50);
}

TEST_CASE("cli kmeans writes centers") {
  TempDir dir;
  write_benchmark(dir);
  CHECK(dispatch({"--verbosity", "quiet", "kmeans",
                  "--target", dir.file("target.emb"), "--k", "4",
                  "--out", dir.file("centers.emb"),
                  "--assign-out", dir.file("assign.txt")}) == 0);
  const EmbeddingSet centers = load_embeddings(dir.file("centers.emb"));
  CHECK(centers.count == 4);
  CHECK(centers.dim == 2);
  std::istringstream assigns(read_bytes(dir.file("assign.txt")));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(assigns, line)) ++lines;
  CHECK(lines == 200);
}

TEST_CASE("cli cost estimate and calibrate") {
  TempDir dir;
  write_text(dir.file("obs.txt"),
             "1280000 90 224 170\n"
             "1280000 90 112 100\n");
  CHECK(dispatch({"--verbosity", "quiet", "cost", "calibrate",
                  "--observations", dir.file("obs.txt"),
                  "--out", dir.file("prof.txt")}) == 0);

  // Subcommand form and the flat `cost --images ...` form both work.
  CHECK(dispatch({"--verbosity", "quiet", "cost", "estimate",
                  "--images", "1280000", "--epochs", "90",
                  "--resolution", "112", "--profile", dir.file("prof.txt")}) == 0);
  CHECK(dispatch({"--verbosity", "quiet", "cost",
                  "--images", "1280000", "--epochs", "90",
                  "--resolution", "112", "--profile", dir.file("prof.txt")}) == 0);
  CHECK(dispatch({"cost"}) == 1);
}

TEST_CASE("cli sequential run writes per-task artifacts") {
  TempDir dir;
  write_benchmark(dir);
  write_text(dir.file("plan.txt"),
             "task = first\n"
             "target = " + dir.file("target.emb") + "\n"
             "method = cluster_min\n"
             "k = 4\n"
             "budget = 100\n"
             "epochs = 100\n"
             "task = second\n"
             "target = " + dir.file("target.emb") + "\n"
             "method = cluster_min\n"
             "k = 4\n"
             "budget = 80\n"
             "epochs = 40\n");
  const int rc = dispatch({"--verbosity", "quiet", "sequential", "run",
                           "--plan", dir.file("plan.txt"),
                           "--source", dir.file("source.emb"),
                           "--source-labels", dir.file("source.lbl"),
                           "--trainer", "proxy",
                           "--out-dir", dir.file("artifacts")});
  CHECK(rc == 0);
  CHECK(read_selection(dir.file("artifacts/first.sel.txt")).size() == 100);
  CHECK(read_selection(dir.file("artifacts/second.sel.txt")).size() == 80);
  const std::string state = read_bytes(dir.file("artifacts/state.txt"));
  CHECK(state.find("cumulative_epochs = 140") != std::string::npos);
  CHECK(state.find("trainer = proxy") != std::string::npos);

  const int cmp = dispatch({"--verbosity", "quiet", "sequential", "compare",
                            "--plan", dir.file("plan.txt"),
                            "--source", dir.file("source.emb"),
                            "--source-labels", dir.file("source.lbl"),
                            "--trainer", "proxy",
                            "--out-dir", dir.file("artifacts")});
  CHECK(cmp == 0);
  const std::string table = read_bytes(dir.file("artifacts/compare.txt"));
  CHECK(table.find("total_sequential_epochs = 140") != std::string::npos);
  CHECK(table.find("total_independent_epochs = 200") != std::string::npos);
}

TEST_CASE("cli synth outputs match the library generator") {
  TempDir dir;
  write_text(dir.file("mix.spec"),
             "dim = 1\n"
             "n = 50\n"
             "seed = 3\n"
             "component = 0 | 1.0 | 1.0\n");
  REQUIRE(dispatch({"--verbosity", "quiet", "synth", "--spec",
                    dir.file("mix.spec"), "--out", dir.file("a.emb"),
                    "--labels-out", dir.file("a.lbl")}) == 0);
  REQUIRE(dispatch({"--verbosity", "quiet", "synth", "--spec",
                    dir.file("mix.spec"), "--out", dir.file("b.emb")}) == 0);
  CHECK(read_bytes(dir.file("a.emb")) == read_bytes(dir.file("b.emb")));
  CHECK(load_labels(dir.file("a.lbl")).size() == 50);
}
