#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "toxsim/experiment.hpp"
#include "toxsim/plot.hpp"

using namespace toxsim;

namespace {

ExperimentSpec tiny_spec() {
  ExperimentSpec spec;
  spec.er_n = 200;
  spec.er_p = 0.02;
  spec.weeks = 2;
  spec.hops_per_week = 2;
  spec.bot_counts = {5, 10};
  spec.runs_per_cell = 2;
  spec.master_seed = 11;
  spec.seed_spec = SeedSpec::fraction(0.1);
  return spec;
}

std::string table_csv(const ReductionTable& table) {
  std::ostringstream out;
  write_reduction_table_csv(out, table);
  return out.str();
}

}  // namespace

TEST_CASE("experiment produces one cell per strategy and bot count") {
  const ExperimentResult result = run_experiment(tiny_spec());
  CHECK(result.table.nodes == 200);
  CHECK(result.table.cells.size() == 4);  // 2 strategies x 2 counts
  for (const ReductionCell& cell : result.table.cells) {
    CHECK(cell.reductions.size() == 2);
    for (double r : cell.reductions) CHECK(std::isfinite(r));
    const double mean = std::accumulate(cell.reductions.begin(), cell.reductions.end(), 0.0) /
                        static_cast<double>(cell.reductions.size());
    CHECK(cell.mean == doctest::Approx(mean).epsilon(1e-12));
  }
  REQUIRE(result.runs.size() == 2);
  // Per run: baseline plus one series per cell.
  for (const auto& run : result.runs) CHECK(run.size() == 5);
  CHECK(result.runs[0][0].first == "baseline");
}

TEST_CASE("experiments are deterministic per master seed") {
  const ExperimentResult a = run_experiment(tiny_spec());
  const ExperimentResult b = run_experiment(tiny_spec());
  CHECK(table_csv(a.table) == table_csv(b.table));

  ExperimentSpec other = tiny_spec();
  other.master_seed = 12;
  const ExperimentResult c = run_experiment(other);
  CHECK(table_csv(a.table) != table_csv(c.table));
}

TEST_CASE("run seeds differ unless the graph is pinned") {
  ExperimentSpec spec = tiny_spec();
  const ExperimentResult fresh = run_experiment(spec);
  // Distinct per-run graphs: baseline totals differ across runs.
  CHECK(fresh.runs[0][0].second.rows.back().total_toxicity !=
        fresh.runs[1][0].second.rows.back().total_toxicity);

  spec.fixed_graph = true;
  const ExperimentResult pinned = run_experiment(spec);
  CHECK(pinned.table.cells.size() == 4);
}

TEST_CASE("experiment validation rejects degenerate specs") {
  {
    ExperimentSpec spec = tiny_spec();
    spec.bot_counts = {0};
    CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
  }
  {
    ExperimentSpec spec = tiny_spec();
    spec.bot_counts.clear();
    CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
  }
  {
    ExperimentSpec spec = tiny_spec();
    spec.runs_per_cell = 0;
    CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
  }
  {
    ExperimentSpec spec = tiny_spec();
    spec.strategies = {PlacementStrategy::Baseline};
    CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
  }
}

TEST_CASE("worker count does not change the results") {
  ExperimentSpec spec = tiny_spec();
  spec.runs_per_cell = 3;
  spec.threads = 1;
  const ExperimentResult serial = run_experiment(spec);
  spec.threads = 3;
  const ExperimentResult parallel = run_experiment(spec);
  CHECK(table_csv(serial.table) == table_csv(parallel.table));
}

TEST_CASE("output files land in the requested directory") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "toxsim_experiment_test";
  fs::remove_all(dir);

  const ExperimentSpec spec = tiny_spec();
  const ExperimentResult result = run_experiment(spec);
  write_experiment_outputs(spec, result, dir.string());

  CHECK(fs::exists(dir / "reduction_table.csv"));
  CHECK(fs::exists(dir / "metrics_run0.csv"));
  CHECK(fs::exists(dir / "metrics_run1.csv"));
  CHECK(fs::exists(dir / "deployment_rp_5.csv"));
  CHECK(fs::exists(dir / "deployment_li_10.csv"));
  CHECK(fs::exists(dir / "resolved_config.txt"));
  CHECK(fs::exists(dir / "plot.svg"));

  std::ifstream config(dir / "resolved_config.txt");
  std::stringstream buffer;
  buffer << config.rdbuf();
  CHECK(buffer.str().find("er_n = 200") != std::string::npos);
  CHECK(buffer.str().find("runs = 2") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("a resolved config snapshot reproduces the spec it came from") {
  ExperimentSpec spec = tiny_spec();
  spec.fixed_graph = true;
  spec.changing_fraction = 0.3;
  spec.initial_toxicity_lo = 0.6;
  spec.strategies = {PlacementStrategy::LowestIndegree};

  std::ostringstream snapshot;
  write_resolved_config(snapshot, spec);
  std::istringstream in(snapshot.str());
  const ExperimentSpec reread = parse_config_file(in, ExperimentSpec{});

  CHECK(reread.er_n == spec.er_n);
  CHECK(reread.er_p == spec.er_p);
  CHECK(reread.fixed_graph == spec.fixed_graph);
  CHECK(reread.changing_fraction == spec.changing_fraction);
  CHECK(reread.initial_toxicity_lo == spec.initial_toxicity_lo);
  CHECK(reread.bot_counts == spec.bot_counts);
  CHECK(reread.strategies == spec.strategies);
  CHECK(reread.runs_per_cell == spec.runs_per_cell);
  CHECK(reread.master_seed == spec.master_seed);
  CHECK(std::get<double>(reread.seed_spec.value) == std::get<double>(spec.seed_spec.value));

  // Identical tables from the original and the round-tripped spec.
  CHECK(table_csv(run_experiment(spec).table) == table_csv(run_experiment(reread).table));
}

TEST_CASE("config files reject unknown keys with a line number") {
  std::istringstream in("weeks = 2\nnonsense = 5\n");
  CHECK_THROWS_WITH_AS(parse_config_file(in, ExperimentSpec{}), doctest::Contains("line 2"),
                       std::runtime_error);
}

TEST_CASE("weekly reduction table covers every cell and week") {
  const ExperimentResult result = run_experiment(tiny_spec());
  std::ostringstream out;
  write_weekly_reduction_csv(out, result);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "nodes,edges,n_bots,strategy,week,mean_reduction_pct,std_reduction_pct");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4 * 2);  // 4 cells x 2 weeks
}

TEST_CASE("plots are byte-stable and draw one polyline per series") {
  std::vector<PlotSeries> series{{"baseline", {{1, 0.5}, {2, 0.55}, {3, 0.6}}}};
  std::ostringstream a, b;
  emit_plot(series, a);
  emit_plot(series, b);
  CHECK(a.str() == b.str());

  auto count = [](const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t pos = hay.find(needle); pos != std::string::npos;
         pos = hay.find(needle, pos + 1))
      ++n;
    return n;
  };
  CHECK(count(a.str(), "<polyline") == 1);
  CHECK(count(a.str(), "baseline") == 1);

  series.push_back({"rp_10", {{1, 0.5}, {2, 0.52}, {3, 0.5}}});
  std::ostringstream two;
  emit_plot(series, two);
  CHECK(count(two.str(), "<polyline") == 2);
  CHECK(count(two.str(), "rp_10") == 1);
}

TEST_CASE("plotting rejects empty input") {
  std::ostringstream out;
  CHECK_THROWS_AS(emit_plot({}, out), std::invalid_argument);
  CHECK_THROWS_AS(emit_plot({{"empty", {}}}, out), std::invalid_argument);
}
