#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "toxsim/behavior.hpp"
#include "toxsim/diffusion.hpp"
#include "toxsim/graph.hpp"
#include "toxsim/intervention.hpp"

namespace toxsim {

struct ExperimentSpec {
  // Graph source: an edge-list path wins over ER parameters when set.
  std::optional<std::string> graph_path;
  std::size_t er_n = 25000;
  double er_p = 0.0005;
  // Regenerate the ER graph per run seed by default; fixed_graph reuses one.
  bool fixed_graph = false;

  CategoryFractions fractions;
  double changing_fraction = 0.47;
  std::optional<std::string> transitions_path;  // default: TransitionMatrix::defaults()
  std::optional<std::string> shift_dist_path;   // default: synthetic

  std::size_t weeks = 8;
  std::size_t hops_per_week = 4;
  SeedSpec seed_spec;
  double initial_toxicity_lo = 0.5;
  double initial_toxicity_hi = 1.0;
  CategoryChangeCadence cadence = CategoryChangeCadence::PerHop;

  std::vector<std::size_t> bot_counts;
  std::vector<PlacementStrategy> strategies = {PlacementStrategy::RandomPlacement,
                                               PlacementStrategy::LowestIndegree};
  std::size_t runs_per_cell = 5;
  std::uint64_t master_seed = 1;
  std::size_t threads = 0;  // 0 = one per run seed up to hardware concurrency
};

struct ReductionCell {
  PlacementStrategy strategy = PlacementStrategy::Baseline;
  std::size_t n_bots = 0;
  std::vector<double> reductions;  // per run seed, final-week total toxicity
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation across runs
};

struct ReductionTable {
  std::size_t nodes = 0;
  std::size_t edges = 0;  // rounded mean across run graphs
  std::vector<ReductionCell> cells;
};

struct ExperimentResult {
  ReductionTable table;
  // Per run seed: labelled series for the baseline and every cell.
  std::vector<std::vector<std::pair<std::string, MetricsSeries>>> runs;
  std::vector<std::vector<BotDeployment>> deployments;  // [cell][run]
};

// For each run seed: one baseline and one intervened simulation per
// (strategy, bot count) cell on the same graph, profile and rng lineage; the
// percentage reduction of final-week total toxicity is aggregated over runs.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Writes reduction_table.csv, reduction_by_week.csv, metrics_run<k>.csv,
// deployment_<cell>.csv, resolved_config.txt and plot.svg under out_dir.
void write_experiment_outputs(const ExperimentSpec& spec, const ExperimentResult& result,
                              const std::string& out_dir);

void write_reduction_table_csv(std::ostream& out, const ReductionTable& table);
void write_weekly_reduction_csv(std::ostream& out, const ExperimentResult& result);
void write_resolved_config(std::ostream& out, const ExperimentSpec& spec);

// Flat "key = value" file using the resolved_config key names; values read
// here are overridden by any explicit CLI flags. A resolved_config.txt can be
// fed back verbatim to reproduce a run.
ExperimentSpec parse_config_file(std::istream& in, ExperimentSpec base);

std::string cell_label(PlacementStrategy strategy, std::size_t n_bots);

}  // namespace toxsim
