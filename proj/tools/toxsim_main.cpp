// toxsim: toxicity diffusion simulations, peace-bot intervention sweeps and
// the post-data analytics pipeline behind them.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "toxsim/analytics.hpp"
#include "toxsim/behavior.hpp"
#include "toxsim/diffusion.hpp"
#include "toxsim/experiment.hpp"
#include "toxsim/graph.hpp"
#include "toxsim/intervention.hpp"
#include "toxsim/plot.hpp"
#include "toxsim/stats.hpp"

namespace fs = std::filesystem;
using namespace toxsim;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

ShiftDistribution resolve_shift_dist(const std::string& spec) {
  if (spec.empty() || spec == "synthetic") return ShiftDistribution::synthetic_default();
  auto in = open_in(spec);
  return ShiftDistribution::load_csv(in);
}

TransitionMatrix resolve_transitions(const std::string& spec) {
  if (spec.empty() || spec == "default") return TransitionMatrix::defaults();
  auto in = open_in(spec);
  return TransitionMatrix::load_csv(in);
}

std::vector<PlacementStrategy> parse_strategies(const std::vector<std::string>& names) {
  std::vector<PlacementStrategy> out;
  for (const std::string& name : names) {
    auto s = strategy_from_string(name);
    if (!s || *s == PlacementStrategy::Baseline)
      throw CLI::ValidationError("--strategy", "expected rp or li, got \"" + name + "\"");
    out.push_back(*s);
  }
  return out;
}

struct GraphArgs {
  std::string graph_path;
  std::size_t er_n = 0;
  double er_p = -1.0;
  bool drop_self_loops = false;

  DirectedGraph load(std::uint64_t seed) const {
    if (!graph_path.empty()) {
      auto in = open_in(graph_path);
      LoadedGraph loaded = load_edge_list(in, {.drop_self_loops = drop_self_loops});
      std::cout << "loaded " << graph_path << ": " << loaded.graph.node_count() << " nodes, "
                << loaded.graph.edge_count() << " edges";
      if (loaded.duplicates_dropped > 0)
        std::cout << " (" << loaded.duplicates_dropped << " duplicate edges collapsed)";
      if (loaded.self_loops_dropped > 0)
        std::cout << " (" << loaded.self_loops_dropped << " self-loops dropped)";
      std::cout << "\n";
      return std::move(loaded.graph);
    }
    if (er_n == 0 || er_p < 0.0)
      throw CLI::ValidationError("--graph", "need --graph or both --er-n and --er-p");
    return generate_er(er_n, er_p, seed);
  }
};

int cmd_generate(std::size_t n, double p, std::uint64_t seed, const std::string& out_path,
                 const std::string& id_map_path) {
  DirectedGraph g = generate_er(n, p, seed);
  {
    auto out = open_out(out_path);
    save_edge_list(g, out);
  }
  if (!id_map_path.empty()) {
    auto out = open_out(id_map_path);
    save_id_map(IdMap::identity(g.node_count()), out);
  }
  std::cout << "wrote " << out_path << ": " << g.node_count() << " nodes, " << g.edge_count()
            << " edges\n";
  return 0;
}

int cmd_simulate(const GraphArgs& graph_args, std::size_t weeks, std::size_t hops_per_week,
                 std::uint64_t seed, const std::string& shift_dist,
                 const std::string& transitions_path, std::size_t bots,
                 const std::string& strategy_name, double seed_fraction,
                 const std::vector<NodeId>& seed_nodes, double init_lo, double init_hi,
                 const CategoryFractions& fractions, double changing_fraction,
                 const std::string& out_dir) {
  const DirectedGraph g = graph_args.load(derive_key(seed, 1));
  const ShiftDistribution shifts = resolve_shift_dist(shift_dist);
  const TransitionMatrix transitions = resolve_transitions(transitions_path);
  const CategoryProfile profile =
      assign_categories(g, fractions, changing_fraction, derive_key(seed, 2));

  SimulationConfig config;
  config.kiter = weeks * hops_per_week;
  config.hops_per_week = hops_per_week;
  config.seeds = seed_nodes.empty() ? SeedSpec::fraction(seed_fraction)
                                    : SeedSpec::nodes(seed_nodes);
  config.initial_toxicity_lo = init_lo;
  config.initial_toxicity_hi = init_hi;
  config.rng_seed = derive_key(seed, 3);

  std::string label = "baseline";
  MetricsSeries series;
  if (bots > 0) {
    auto strategy = strategy_from_string(strategy_name);
    if (!strategy || *strategy == PlacementStrategy::Baseline)
      throw CLI::ValidationError("--strategy", "expected rp or li when --bots is set");
    BotDeployment dep = deploy_bots(g, bots, *strategy, derive_key(seed, 4));
    series = run_simulation(dep.augmented, profile, shifts, transitions, config, g.node_count());
    label = cell_label(*strategy, bots);
    auto out = open_out(fs::path(out_dir) / ("deployment_" + label + ".csv"));
    write_deployment_csv(out, {dep});
  } else {
    series = run_simulation(g, profile, shifts, transitions, config);
  }

  {
    auto out = open_out(fs::path(out_dir) / "metrics_run0.csv");
    write_metrics_csv(out, {{label, series}});
  }
  {
    ExperimentSpec mirror;
    if (!graph_args.graph_path.empty()) mirror.graph_path = graph_args.graph_path;
    if (graph_args.er_n > 0) mirror.er_n = graph_args.er_n;
    if (graph_args.er_p >= 0.0) mirror.er_p = graph_args.er_p;
    mirror.fractions = fractions;
    mirror.changing_fraction = changing_fraction;
    if (transitions_path != "default") mirror.transitions_path = transitions_path;
    if (!shift_dist.empty() && shift_dist != "synthetic") mirror.shift_dist_path = shift_dist;
    mirror.weeks = weeks;
    mirror.hops_per_week = hops_per_week;
    mirror.seed_spec = config.seeds;
    mirror.initial_toxicity_lo = init_lo;
    mirror.initial_toxicity_hi = init_hi;
    mirror.strategies.clear();
    if (bots > 0) {
      mirror.bot_counts = {bots};
      if (const auto s = strategy_from_string(strategy_name)) mirror.strategies = {*s};
    }
    mirror.runs_per_cell = 1;
    mirror.master_seed = seed;
    auto out = open_out(fs::path(out_dir) / "resolved_config.txt");
    write_resolved_config(out, mirror);
  }
  for (const WeekRecord& r : series.rows)
    std::cout << "week " << r.week << ": total " << r.total_toxicity << ", mean "
              << r.mean_toxicity << ", active " << r.active_nodes << "\n";
  std::cout << "wrote " << (fs::path(out_dir) / "metrics_run0.csv").string() << "\n";
  return 0;
}

int cmd_experiment(ExperimentSpec spec, const std::string& out_dir) {
  const ExperimentResult result = run_experiment(spec);
  write_experiment_outputs(spec, result, out_dir);
  std::cout << "nodes " << result.table.nodes << ", edges " << result.table.edges << "\n";
  for (const ReductionCell& cell : result.table.cells)
    std::cout << cell_label(cell.strategy, cell.n_bots) << ": mean reduction " << cell.mean
              << "% (std " << cell.stddev << ")\n";
  std::cout << "outputs under " << out_dir << "\n";
  return 0;
}

int cmd_analyze(const std::string& posts_path, const std::string& graph_path,
                std::size_t input_bins, std::size_t shift_bins, double margin, bool per_user,
                bool post_weighted, const std::string& out_dir) {
  auto graph_in = open_in(graph_path);
  const LoadedGraph loaded = load_edge_list(graph_in);
  auto posts_in = open_in(posts_path);
  const std::vector<PostRecord> posts = load_posts_csv(posts_in);

  const ShiftComputation shifts =
      compute_shifts(posts, loaded.graph, loaded.ids,
                     post_weighted ? NeighborWeighting::PostWeighted
                                   : NeighborWeighting::UserWeighted);
  if (shifts.posts_skipped_unresolved > 0)
    std::cout << "skipped " << shifts.posts_skipped_unresolved << " posts from "
              << shifts.users_unresolved << " users absent from the graph\n";
  std::cout << shifts.samples.size() << " shift samples\n";

  const CategoryAssignment assignment = build_category_assignment(shifts.samples);

  {  // per-user categories and change flags
    auto out = open_out(fs::path(out_dir) / "category_assignment.csv");
    out << "user_id,category,changing\n";
    for (std::size_t i = 0; i < assignment.users.size(); ++i)
      out << loaded.ids.internal_to_external[assignment.users[i]] << ','
          << to_string(assignment.overall[i]) << ',' << int(assignment.changing[i]) << '\n';
  }

  auto summary = open_out(fs::path(out_dir) / "analysis_summary.txt");
  summary << shifts.samples.size() << " shift samples over " << assignment.users.size()
          << " users";
  if (shifts.posts_skipped_unresolved > 0)
    summary << "; skipped " << shifts.posts_skipped_unresolved << " posts from "
            << shifts.users_unresolved << " unresolved users";
  summary << "\n\n";

  {  // homophily of changing vs non-changing users
    std::vector<int> labels(loaded.graph.node_count(), -1);
    for (std::size_t i = 0; i < assignment.users.size(); ++i)
      labels[assignment.users[i]] = assignment.changing[i] ? 1 : 0;
    const HomophilyReport report = homophily(loaded.graph, labels, margin);
    auto csv = open_out(fs::path(out_dir) / "homophily_report.csv");
    write_homophily_csv(csv, report);
    summary << "labels: 0 = not changing, 1 = changing\n";
    write_homophily_text(summary, report);
    write_homophily_text(std::cout, report);
    summary << "\n";
  }

  {  // shift dependence on category and on incoming toxicity
    std::vector<std::vector<double>> by_category(kCategoryCount);
    std::vector<std::vector<double>> by_input(3);  // input terciles
    if (per_user) {
      std::vector<double> user_mean(assignment.users.size(), 0.0);
      std::vector<std::size_t> user_n(assignment.users.size(), 0);
      for (const ShiftSample& s : shifts.samples) {
        const std::size_t i = assignment.index_of(s.user);
        user_mean[i] += s.shift;
        ++user_n[i];
      }
      for (std::size_t i = 0; i < assignment.users.size(); ++i)
        by_category[static_cast<std::size_t>(assignment.overall[i])].push_back(
            user_mean[i] / static_cast<double>(user_n[i]));
    } else {
      for (const ShiftSample& s : shifts.samples)
        by_category[static_cast<std::size_t>(
                        assignment.overall[assignment.index_of(s.user)])]
            .push_back(s.shift);
    }
    for (const ShiftSample& s : shifts.samples)
      by_input[std::min<std::size_t>(static_cast<std::size_t>(s.neigh_avg * 3.0), 2)].push_back(
          s.shift);

    auto report = [&](const char* name, std::vector<std::vector<double>> groups) {
      std::erase_if(groups, [](const auto& g) { return g.empty(); });
      if (groups.size() < 2) {
        summary << name << ": fewer than two non-empty groups, test skipped\n";
        return;
      }
      const KruskalWallisResult kw = kruskal_wallis(groups);
      summary << name << ": H = " << kw.h << ", df = " << kw.df << ", p = " << kw.p_value
              << "\n";
    };
    report("Kruskal-Wallis, shift by user category", by_category);
    report("Kruskal-Wallis, shift by incoming-toxicity tercile", by_input);
    summary << "\n";
  }

  {  // transition matrix estimate
    const TransitionEstimate est = category_transitions(assignment);
    auto out = open_out(fs::path(out_dir) / "transition_matrix.csv");
    est.matrix.save_csv(out);
    summary << "changing fraction " << est.changing_fraction << " (" << est.changing_users
            << " of " << est.users_with_history << " users with history)\n";
    std::cout << "changing fraction " << est.changing_fraction << " (" << est.changing_users
              << " of " << est.users_with_history << " users with history)\n";
  }

  {  // empirical shift distribution in the simulator's input format
    const ShiftExportResult exported =
        export_shift_distribution(shifts.samples, assignment, input_bins, shift_bins);
    auto out = open_out(fs::path(out_dir) / "shift_distribution.csv");
    exported.distribution.save_csv(out);
    if (!exported.point_mass_filled.empty())
      summary << exported.point_mass_filled.size()
              << " empty input bins filled with a point mass at shift 0\n";
  }

  std::cout << "analysis written under " << out_dir << "\n";
  return 0;
}

int cmd_plot(const std::vector<std::string>& metrics_paths, const std::string& out_path) {
  std::vector<PlotSeries> series;
  for (const std::string& path : metrics_paths) {
    auto in = open_in(path);
    for (const auto& [label, metrics] : load_metrics_csv(in)) {
      PlotSeries s;
      s.label = metrics_paths.size() > 1 ? fs::path(path).stem().string() + ":" + label : label;
      for (const WeekRecord& r : metrics.rows)
        s.points.emplace_back(static_cast<double>(r.week), r.mean_toxicity);
      series.push_back(std::move(s));
    }
  }
  auto out = open_out(out_path);
  emit_plot(series, out);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toxicity diffusion simulator and analysis toolkit"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "generate an Erdos-Renyi graph edge list");
  std::size_t gen_n = 25000;
  double gen_p = 0.0005;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "graph.edges";
  std::string gen_id_map;
  generate->add_option("--er-n", gen_n, "node count");
  generate->add_option("--er-p", gen_p, "edge probability");
  generate->add_option("--seed", gen_seed, "rng seed");
  generate->add_option("--out", gen_out, "output edge-list path");
  generate->add_option("--id-map", gen_id_map, "also write an identity id-map sidecar");

  // shared simulate/experiment options
  GraphArgs sim_graph, exp_graph;
  CategoryFractions fractions;
  double changing_fraction = 0.47;

  auto add_graph_opts = [](CLI::App* cmd, GraphArgs& args) {
    cmd->add_option("--graph", args.graph_path, "edge-list file (overrides --er-n/--er-p)");
    cmd->add_option("--er-n", args.er_n, "ER node count");
    cmd->add_option("--er-p", args.er_p, "ER edge probability");
    cmd->add_flag("--drop-self-loops", args.drop_self_loops,
                  "drop and count self-loop lines instead of rejecting the file");
  };

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run a single simulation");
  std::size_t sim_weeks = 8, sim_hpw = 4, sim_bots = 0;
  std::uint64_t sim_seed = 1;
  std::string sim_shift_dist = "synthetic", sim_transitions = "default", sim_strategy = "rp";
  std::string sim_out_dir = "out";
  double sim_seed_fraction = 0.05, sim_init_lo = 0.5, sim_init_hi = 1.0;
  std::vector<NodeId> sim_seed_nodes;
  add_graph_opts(simulate, sim_graph);
  simulate->add_option("--weeks", sim_weeks, "number of weeks");
  simulate->add_option("--hops-per-week", sim_hpw, "hops per week");
  simulate->add_option("--seed", sim_seed, "master rng seed");
  simulate->add_option("--shift-dist", sim_shift_dist, "shift distribution CSV or 'synthetic'");
  simulate->add_option("--transitions", sim_transitions, "transition CSV or 'default'");
  simulate->add_option("--bots", sim_bots, "deploy this many peace-bots (0 = baseline)");
  simulate->add_option("--strategy", sim_strategy, "bot placement: rp or li");
  simulate->add_option("--seed-fraction", sim_seed_fraction, "fraction of nodes seeded");
  simulate->add_option("--seed-nodes", sim_seed_nodes, "explicit seed node ids")
      ->delimiter(',');
  simulate->add_option("--init-lo", sim_init_lo, "initial toxicity lower bound");
  simulate->add_option("--init-hi", sim_init_hi, "initial toxicity upper bound");
  simulate->add_option("--amplifiers", fractions.amplifier, "amplifier fraction");
  simulate->add_option("--attenuators", fractions.attenuator, "attenuator fraction");
  simulate->add_option("--copycats", fractions.copycat, "copycat fraction");
  simulate->add_option("--changing", changing_fraction, "changing-user fraction");
  simulate->add_option("--out-dir", sim_out_dir, "output directory");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "baseline vs intervention sweep");
  std::vector<std::size_t> exp_bots;
  std::vector<std::string> exp_strategies;
  std::size_t exp_weeks = 8, exp_hpw = 4, exp_runs = 5, exp_threads = 0;
  std::uint64_t exp_seed = 1;
  std::string exp_shift_dist, exp_transitions, exp_out_dir = "out", exp_config;
  double exp_seed_fraction = 0.05, exp_init_lo = 0.5, exp_init_hi = 1.0;
  bool exp_fixed_graph = false;
  add_graph_opts(experiment, exp_graph);
  experiment->add_option("--config", exp_config,
                         "\"key = value\" file; explicit flags override it");
  auto* o_weeks = experiment->add_option("--weeks", exp_weeks, "number of weeks");
  auto* o_hpw = experiment->add_option("--hops-per-week", exp_hpw, "hops per week");
  auto* o_bots =
      experiment->add_option("--bots", exp_bots, "bot counts, e.g. 56,112,224")->delimiter(',');
  auto* o_strats =
      experiment->add_option("--strategy", exp_strategies, "strategies: rp, li")->delimiter(',');
  auto* o_runs = experiment->add_option("--runs", exp_runs, "runs per cell");
  auto* o_seed = experiment->add_option("--seed", exp_seed, "master rng seed");
  auto* o_shift = experiment->add_option("--shift-dist", exp_shift_dist,
                                         "shift distribution CSV or 'synthetic'");
  auto* o_trans =
      experiment->add_option("--transitions", exp_transitions, "transition CSV or 'default'");
  auto* o_frac =
      experiment->add_option("--seed-fraction", exp_seed_fraction, "fraction of nodes seeded");
  auto* o_lo = experiment->add_option("--init-lo", exp_init_lo, "initial toxicity lower bound");
  auto* o_hi = experiment->add_option("--init-hi", exp_init_hi, "initial toxicity upper bound");
  auto* o_fixed =
      experiment->add_flag("--fixed-graph", exp_fixed_graph, "one ER graph for all runs");
  auto* o_threads = experiment->add_option("--threads", exp_threads, "worker threads (0 = auto)");
  auto* o_amp = experiment->add_option("--amplifiers", fractions.amplifier, "amplifier fraction");
  auto* o_atn =
      experiment->add_option("--attenuators", fractions.attenuator, "attenuator fraction");
  auto* o_cc = experiment->add_option("--copycats", fractions.copycat, "copycat fraction");
  auto* o_chg =
      experiment->add_option("--changing", changing_fraction, "changing-user fraction");
  experiment->add_option("--out-dir", exp_out_dir, "output directory");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "post-data pipeline: shifts, IQR categories, "
                                                "homophily, Kruskal-Wallis, export");
  std::string ana_posts, ana_graph, ana_out_dir = "out";
  std::size_t ana_input_bins = 20, ana_shift_bins = 40;
  double ana_margin = 0.05;
  bool ana_per_user = false, ana_post_weighted = false;
  analyze->add_option("--posts", ana_posts, "posts CSV (user_id,bucket,toxicity)")->required();
  analyze->add_option("--graph", ana_graph, "edge-list file with the posts' user ids")
      ->required();
  analyze->add_option("--input-bins", ana_input_bins, "input-toxicity bins for export");
  analyze->add_option("--shift-bins", ana_shift_bins, "shift bins for export");
  analyze->add_option("--margin", ana_margin, "homophily verdict margin");
  analyze->add_flag("--per-user", ana_per_user, "Kruskal-Wallis on per-user mean shifts");
  analyze->add_flag("--post-weighted", ana_post_weighted,
                    "weight neighbourhood averages by post count");
  analyze->add_option("--out-dir", ana_out_dir, "output directory");

  // plot
  auto* plot = app.add_subcommand("plot", "render metrics CSVs as an SVG line chart");
  std::vector<std::string> plot_inputs;
  std::string plot_out = "plot.svg";
  plot->add_option("metrics", plot_inputs, "metrics CSV files")->required();
  plot->add_option("--out", plot_out, "output SVG path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(gen_n, gen_p, gen_seed, gen_out, gen_id_map);
    if (simulate->parsed())
      return cmd_simulate(sim_graph, sim_weeks, sim_hpw, sim_seed, sim_shift_dist,
                          sim_transitions, sim_bots, sim_strategy, sim_seed_fraction,
                          sim_seed_nodes, sim_init_lo, sim_init_hi, fractions,
                          changing_fraction, sim_out_dir);
    if (experiment->parsed()) {
      ExperimentSpec spec;
      if (!exp_config.empty()) {
        auto in = open_in(exp_config);
        spec = parse_config_file(in, spec);
      }
      if (!exp_graph.graph_path.empty()) spec.graph_path = exp_graph.graph_path;
      if (exp_graph.er_n > 0) spec.er_n = exp_graph.er_n;
      if (exp_graph.er_p >= 0.0) spec.er_p = exp_graph.er_p;
      if (o_fixed->count()) spec.fixed_graph = exp_fixed_graph;
      if (o_amp->count()) spec.fractions.amplifier = fractions.amplifier;
      if (o_atn->count()) spec.fractions.attenuator = fractions.attenuator;
      if (o_cc->count()) spec.fractions.copycat = fractions.copycat;
      if (o_chg->count()) spec.changing_fraction = changing_fraction;
      if (o_trans->count()) {
        if (exp_transitions == "default")
          spec.transitions_path.reset();
        else
          spec.transitions_path = exp_transitions;
      }
      if (o_shift->count()) {
        if (exp_shift_dist == "synthetic")
          spec.shift_dist_path.reset();
        else
          spec.shift_dist_path = exp_shift_dist;
      }
      if (o_weeks->count()) spec.weeks = exp_weeks;
      if (o_hpw->count()) spec.hops_per_week = exp_hpw;
      if (o_frac->count()) spec.seed_spec = SeedSpec::fraction(exp_seed_fraction);
      if (o_lo->count()) spec.initial_toxicity_lo = exp_init_lo;
      if (o_hi->count()) spec.initial_toxicity_hi = exp_init_hi;
      if (o_bots->count()) spec.bot_counts = exp_bots;
      if (o_strats->count()) spec.strategies = parse_strategies(exp_strategies);
      if (o_runs->count()) spec.runs_per_cell = exp_runs;
      if (o_seed->count()) spec.master_seed = exp_seed;
      if (o_threads->count()) spec.threads = exp_threads;
      if (spec.bot_counts.empty())
        throw CLI::ValidationError("--bots", "at least one bot count is required");
      return cmd_experiment(std::move(spec), exp_out_dir);
    }
    if (analyze->parsed())
      return cmd_analyze(ana_posts, ana_graph, ana_input_bins, ana_shift_bins, ana_margin,
                         ana_per_user, ana_post_weighted, ana_out_dir);
    if (plot->parsed()) return cmd_plot(plot_inputs, plot_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
