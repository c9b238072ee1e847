#include "toxsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "toxsim/plot.hpp"
#include "toxsim/rng.hpp"

namespace toxsim {

namespace {

constexpr std::uint64_t kRunTag = 31;
constexpr std::uint64_t kGraphTag = 32;
constexpr std::uint64_t kAssignTag = 33;
constexpr std::uint64_t kSimTag = 34;
constexpr std::uint64_t kDeployTag = 35;

ShiftDistribution load_shifts(const ExperimentSpec& spec) {
  if (!spec.shift_dist_path) return ShiftDistribution::synthetic_default();
  std::ifstream in(*spec.shift_dist_path);
  if (!in) throw std::runtime_error("cannot open shift distribution " + *spec.shift_dist_path);
  return ShiftDistribution::load_csv(in);
}

TransitionMatrix load_transitions(const ExperimentSpec& spec) {
  if (!spec.transitions_path) return TransitionMatrix::defaults();
  std::ifstream in(*spec.transitions_path);
  if (!in) throw std::runtime_error("cannot open transition matrix " + *spec.transitions_path);
  return TransitionMatrix::load_csv(in);
}

void validate(const ExperimentSpec& spec) {
  if (spec.runs_per_cell < 1) throw std::invalid_argument("runs_per_cell must be at least 1");
  if (spec.bot_counts.empty()) throw std::invalid_argument("at least one bot count is required");
  for (std::size_t b : spec.bot_counts)
    if (b == 0)
      throw std::invalid_argument("bot count 0 is invalid; the baseline is always implicit");
  if (spec.strategies.empty()) throw std::invalid_argument("at least one strategy is required");
  for (PlacementStrategy s : spec.strategies)
    if (s == PlacementStrategy::Baseline)
      throw std::invalid_argument("baseline is implicit, not a strategy cell");
  if (spec.weeks < 1) throw std::invalid_argument("weeks must be at least 1");
}

struct RunOutput {
  std::vector<std::pair<std::string, MetricsSeries>> series;
  std::vector<double> cell_reductions;           // indexed like cells
  std::vector<BotDeployment> cell_deployments;   // indexed like cells
  std::size_t graph_edges = 0;
};

}  // namespace

std::string cell_label(PlacementStrategy strategy, std::size_t n_bots) {
  return std::string(to_string(strategy)) + "_" + std::to_string(n_bots);
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  validate(spec);

  const ShiftDistribution shifts = load_shifts(spec);
  const TransitionMatrix transitions = load_transitions(spec);

  // Edge-list graphs are fixed data; ER graphs are per-run unless pinned.
  std::optional<DirectedGraph> shared_graph;
  if (spec.graph_path) {
    std::ifstream in(*spec.graph_path);
    if (!in) throw std::runtime_error("cannot open graph " + *spec.graph_path);
    shared_graph = load_edge_list(in).graph;
  } else if (spec.fixed_graph) {
    shared_graph = generate_er(spec.er_n, spec.er_p, derive_key(spec.master_seed, kGraphTag, 0));
  }

  std::vector<std::pair<PlacementStrategy, std::size_t>> cells;
  for (PlacementStrategy s : spec.strategies)
    for (std::size_t b : spec.bot_counts) cells.emplace_back(s, b);

  std::vector<RunOutput> outputs(spec.runs_per_cell);
  auto run_one = [&](std::size_t run_index) {
    const std::uint64_t run_seed = derive_key(spec.master_seed, kRunTag, run_index);

    DirectedGraph local_graph;
    const DirectedGraph* graph = nullptr;
    if (shared_graph) {
      graph = &*shared_graph;
    } else {
      local_graph = generate_er(spec.er_n, spec.er_p, derive_key(run_seed, kGraphTag));
      graph = &local_graph;
    }

    const CategoryProfile profile = assign_categories(
        *graph, spec.fractions, spec.changing_fraction, derive_key(run_seed, kAssignTag));

    SimulationConfig config;
    config.kiter = spec.weeks * spec.hops_per_week;
    config.hops_per_week = spec.hops_per_week;
    config.seeds = spec.seed_spec;
    config.initial_toxicity_lo = spec.initial_toxicity_lo;
    config.initial_toxicity_hi = spec.initial_toxicity_hi;
    config.cadence = spec.cadence;
    config.rng_seed = derive_key(run_seed, kSimTag);

    RunOutput out;
    out.graph_edges = graph->edge_count();
    const MetricsSeries baseline = run_simulation(*graph, profile, shifts, transitions, config);
    if (baseline.rows.empty())
      throw std::runtime_error("simulation produced no weekly record; check weeks and hops");
    const double baseline_total = baseline.rows.back().total_toxicity;
    out.series.emplace_back("baseline", baseline);

    for (const auto& [strategy, n_bots] : cells) {
      // One deployment seed per strategy: growing bot counts nest targets.
      BotDeployment dep = deploy_bots(
          *graph, n_bots, strategy,
          derive_key(run_seed, kDeployTag, static_cast<std::uint64_t>(strategy)));
      const MetricsSeries intervened = run_simulation(dep.augmented, profile, shifts,
                                                      transitions, config, graph->node_count());
      out.cell_reductions.push_back(
          percentage_reduction(baseline_total, intervened.rows.back().total_toxicity));
      out.series.emplace_back(cell_label(strategy, n_bots), intervened);
      out.cell_deployments.push_back(std::move(dep));
    }
    outputs[run_index] = std::move(out);
  };

  std::size_t workers = spec.threads;
  if (workers == 0)
    workers = std::max<std::size_t>(1, std::min<std::size_t>(
        spec.runs_per_cell, std::thread::hardware_concurrency()));
  workers = std::min(workers, spec.runs_per_cell);
  if (workers <= 1) {
    for (std::size_t r = 0; r < spec.runs_per_cell; ++r) run_one(r);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        while (true) {
          const std::size_t r = next.fetch_add(1);
          if (r >= spec.runs_per_cell) break;
          run_one(r);
        }
      });
    for (auto& t : pool) t.join();
  }

  ExperimentResult result;
  result.table.nodes = shared_graph ? shared_graph->node_count() : spec.er_n;
  double mean_edges = 0.0;
  for (const RunOutput& out : outputs)
    mean_edges += static_cast<double>(out.graph_edges) / static_cast<double>(outputs.size());
  result.table.edges = static_cast<std::size_t>(std::llround(mean_edges));

  result.deployments.resize(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    ReductionCell cell;
    cell.strategy = cells[c].first;
    cell.n_bots = cells[c].second;
    for (RunOutput& out : outputs) {
      cell.reductions.push_back(out.cell_reductions[c]);
      result.deployments[c].push_back(std::move(out.cell_deployments[c]));
    }
    cell.mean = std::accumulate(cell.reductions.begin(), cell.reductions.end(), 0.0) /
                static_cast<double>(cell.reductions.size());
    double ss = 0.0;
    for (double r : cell.reductions) ss += (r - cell.mean) * (r - cell.mean);
    cell.stddev = cell.reductions.size() > 1
                      ? std::sqrt(ss / static_cast<double>(cell.reductions.size() - 1))
                      : 0.0;
    result.table.cells.push_back(std::move(cell));
  }
  for (RunOutput& out : outputs) result.runs.push_back(std::move(out.series));
  return result;
}

void write_reduction_table_csv(std::ostream& out, const ReductionTable& table) {
  out << "nodes,edges,n_bots,strategy,mean_reduction_pct,std_reduction_pct\n";
  char buf[160];
  for (const ReductionCell& cell : table.cells) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%s,%.6f,%.6f", table.nodes, table.edges,
                  cell.n_bots, to_string(cell.strategy).data(), cell.mean, cell.stddev);
    out << buf << '\n';
  }
}

void write_weekly_reduction_csv(std::ostream& out, const ExperimentResult& result) {
  out << "nodes,edges,n_bots,strategy,week,mean_reduction_pct,std_reduction_pct\n";
  if (result.runs.empty()) return;
  const std::size_t weeks = result.runs[0][0].second.rows.size();
  char buf[192];
  for (std::size_t c = 0; c < result.table.cells.size(); ++c) {
    const ReductionCell& cell = result.table.cells[c];
    for (std::size_t w = 0; w < weeks; ++w) {
      std::vector<double> reductions;
      for (const auto& run : result.runs) {
        const double baseline = run[0].second.rows[w].total_toxicity;
        if (!(baseline > 0.0)) continue;
        reductions.push_back(
            percentage_reduction(baseline, run[c + 1].second.rows[w].total_toxicity));
      }
      if (reductions.empty()) continue;
      const double mean = std::accumulate(reductions.begin(), reductions.end(), 0.0) /
                          static_cast<double>(reductions.size());
      double ss = 0.0;
      for (double r : reductions) ss += (r - mean) * (r - mean);
      const double stddev = reductions.size() > 1
                                ? std::sqrt(ss / static_cast<double>(reductions.size() - 1))
                                : 0.0;
      std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%s,%zu,%.6f,%.6f", result.table.nodes,
                    result.table.edges, cell.n_bots, to_string(cell.strategy).data(),
                    result.runs[0][0].second.rows[w].week, mean, stddev);
      out << buf << '\n';
    }
  }
}

void write_resolved_config(std::ostream& out, const ExperimentSpec& spec) {
  out << "graph = " << (spec.graph_path ? *spec.graph_path : std::string("er")) << "\n";
  out << "er_n = " << spec.er_n << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", spec.er_p);
  out << "er_p = " << buf << "\n";
  out << "fixed_graph = " << (spec.fixed_graph ? "true" : "false") << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", spec.fractions.amplifier);
  out << "fraction_amplifier = " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", spec.fractions.attenuator);
  out << "fraction_attenuator = " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", spec.fractions.copycat);
  out << "fraction_copycat = " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", spec.changing_fraction);
  out << "changing_fraction = " << buf << "\n";
  out << "transitions = " << (spec.transitions_path ? *spec.transitions_path : "default")
      << "\n";
  out << "shift_dist = " << (spec.shift_dist_path ? *spec.shift_dist_path : "synthetic") << "\n";
  out << "weeks = " << spec.weeks << "\n";
  out << "hops_per_week = " << spec.hops_per_week << "\n";
  out << "cadence = "
      << (spec.cadence == CategoryChangeCadence::PerHop ? "per_hop" : "per_week") << "\n";
  if (const auto* frac = std::get_if<double>(&spec.seed_spec.value)) {
    std::snprintf(buf, sizeof buf, "%.17g", *frac);
    out << "seed_fraction = " << buf << "\n";
  } else {
    const auto& nodes = std::get<std::vector<NodeId>>(spec.seed_spec.value);
    out << "seed_nodes =";
    for (NodeId v : nodes) out << ' ' << v;
    out << "\n";
  }
  std::snprintf(buf, sizeof buf, "%.17g", spec.initial_toxicity_lo);
  out << "initial_toxicity_lo = " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", spec.initial_toxicity_hi);
  out << "initial_toxicity_hi = " << buf << "\n";
  out << "bots =";
  for (std::size_t b : spec.bot_counts) out << ' ' << b;
  out << "\n";
  out << "strategies =";
  for (PlacementStrategy s : spec.strategies) out << ' ' << to_string(s);
  out << "\n";
  out << "runs = " << spec.runs_per_cell << "\n";
  out << "seed = " << spec.master_seed << "\n";
}

ExperimentSpec parse_config_file(std::istream& in, ExperimentSpec base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected \"key = value\"");
    auto trim = [](std::string s) {
      const std::size_t a = s.find_first_not_of(" \t\r");
      const std::size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto fail = [&](const std::string& what) -> std::runtime_error {
      return std::runtime_error("config line " + std::to_string(line_no) + ": " + what);
    };

    try {
      if (key == "graph") {
        if (value == "er")
          base.graph_path.reset();
        else
          base.graph_path = value;
      } else if (key == "er_n") {
        base.er_n = std::stoull(value);
      } else if (key == "er_p") {
        base.er_p = std::stod(value);
      } else if (key == "fixed_graph") {
        base.fixed_graph = value == "true";
      } else if (key == "fraction_amplifier") {
        base.fractions.amplifier = std::stod(value);
      } else if (key == "fraction_attenuator") {
        base.fractions.attenuator = std::stod(value);
      } else if (key == "fraction_copycat") {
        base.fractions.copycat = std::stod(value);
      } else if (key == "changing_fraction") {
        base.changing_fraction = std::stod(value);
      } else if (key == "transitions") {
        if (value == "default")
          base.transitions_path.reset();
        else
          base.transitions_path = value;
      } else if (key == "shift_dist") {
        if (value == "synthetic")
          base.shift_dist_path.reset();
        else
          base.shift_dist_path = value;
      } else if (key == "weeks") {
        base.weeks = std::stoull(value);
      } else if (key == "hops_per_week") {
        base.hops_per_week = std::stoull(value);
      } else if (key == "cadence") {
        if (value == "per_hop")
          base.cadence = CategoryChangeCadence::PerHop;
        else if (value == "per_week")
          base.cadence = CategoryChangeCadence::PerWeek;
        else
          throw fail("cadence must be per_hop or per_week");
      } else if (key == "seed_fraction") {
        base.seed_spec = SeedSpec::fraction(std::stod(value));
      } else if (key == "seed_nodes") {
        std::vector<NodeId> nodes;
        std::istringstream ss(value);
        std::uint64_t id = 0;
        while (ss >> id) nodes.push_back(static_cast<NodeId>(id));
        base.seed_spec = SeedSpec::nodes(std::move(nodes));
      } else if (key == "initial_toxicity_lo") {
        base.initial_toxicity_lo = std::stod(value);
      } else if (key == "initial_toxicity_hi") {
        base.initial_toxicity_hi = std::stod(value);
      } else if (key == "bots") {
        base.bot_counts.clear();
        std::istringstream ss(value);
        std::size_t b = 0;
        while (ss >> b) base.bot_counts.push_back(b);
      } else if (key == "strategies") {
        base.strategies.clear();
        std::istringstream ss(value);
        std::string name;
        while (ss >> name) {
          const auto s = strategy_from_string(name);
          if (!s) throw fail("unknown strategy \"" + name + "\"");
          base.strategies.push_back(*s);
        }
      } else if (key == "runs") {
        base.runs_per_cell = std::stoull(value);
      } else if (key == "seed") {
        base.master_seed = std::stoull(value);
      } else if (key == "threads") {
        base.threads = std::stoull(value);
      } else {
        throw fail("unknown key \"" + key + "\"");
      }
    } catch (const std::runtime_error&) {
      throw;
    } catch (const std::exception&) {
      throw fail("bad value \"" + value + "\" for key \"" + key + "\"");
    }
  }
  return base;
}

void write_experiment_outputs(const ExperimentSpec& spec, const ExperimentResult& result,
                              const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(out_dir) / name);
    if (!out) throw std::runtime_error("cannot write " + name + " under " + out_dir);
    return out;
  };

  {
    auto out = open("reduction_table.csv");
    write_reduction_table_csv(out, result.table);
  }
  {
    auto out = open("reduction_by_week.csv");
    write_weekly_reduction_csv(out, result);
  }
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    auto out = open("metrics_run" + std::to_string(r) + ".csv");
    write_metrics_csv(out, result.runs[r]);
  }
  for (std::size_t c = 0; c < result.table.cells.size(); ++c) {
    const ReductionCell& cell = result.table.cells[c];
    auto out = open("deployment_" + cell_label(cell.strategy, cell.n_bots) + ".csv");
    write_deployment_csv(out, result.deployments[c]);
  }
  {
    auto out = open("resolved_config.txt");
    write_resolved_config(out, spec);
  }
  {
    // Mean weekly toxicity per label, averaged over run seeds.
    std::vector<PlotSeries> series;
    if (!result.runs.empty()) {
      const std::size_t labels = result.runs[0].size();
      for (std::size_t l = 0; l < labels; ++l) {
        PlotSeries s;
        s.label = result.runs[0][l].first;
        const std::size_t weeks = result.runs[0][l].second.rows.size();
        for (std::size_t w = 0; w < weeks; ++w) {
          double mean = 0.0;
          for (const auto& run : result.runs)
            mean += run[l].second.rows[w].mean_toxicity / static_cast<double>(result.runs.size());
          s.points.emplace_back(static_cast<double>(result.runs[0][l].second.rows[w].week), mean);
        }
        series.push_back(std::move(s));
      }
    }
    auto out = open("plot.svg");
    emit_plot(series, out);
  }
}

}  // namespace toxsim
