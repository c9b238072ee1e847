#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "toxsim/behavior.hpp"
#include "toxsim/graph.hpp"

namespace toxsim {

// Either a fraction of nodes (rounded) or an explicit node list.
struct SeedSpec {
  std::variant<double, std::vector<NodeId>> value = 0.05;

  static SeedSpec fraction(double f) { return {f}; }
  static SeedSpec nodes(std::vector<NodeId> ids) { return {std::move(ids)}; }
};

enum class CategoryChangeCadence { PerHop, PerWeek };

struct SimulationConfig {
  std::size_t kiter = 32;         // total hops
  std::size_t hops_per_week = 4;  // metrics cadence
  SeedSpec seeds;
  double initial_toxicity_lo = 0.5;
  double initial_toxicity_hi = 1.0;
  std::uint64_t rng_seed = 0;
  CategoryChangeCadence cadence = CategoryChangeCadence::PerHop;
  // Whether a node whose toxicity was clamped to 0 keeps counting toward
  // neighbours' averages. Peace-bots always count regardless.
  bool zero_toxicity_stays_active = true;
};

struct WeekRecord {
  std::size_t week = 0;  // 1-based
  double total_toxicity = 0.0;
  double mean_toxicity = 0.0;
  std::size_t active_nodes = 0;
};

struct MetricsSeries {
  std::vector<WeekRecord> rows;
};

// Hop-by-hop toxicity propagation with snapshot semantics: every update in a
// hop reads the pre-hop state and commits atomically, so the result is
// independent of node iteration order. Nodes with id >= original_node_count
// are peace-bots: permanently active at toxicity 0, never updated, exempt
// from category transitions, excluded from metrics.
class Simulation {
 public:
  Simulation(const DirectedGraph& g, const CategoryProfile& profile,
             const ShiftDistribution& shifts, const TransitionMatrix& transitions,
             SimulationConfig config, std::size_t original_node_count);

  Simulation(const DirectedGraph& g, const CategoryProfile& profile,
             const ShiftDistribution& shifts, const TransitionMatrix& transitions,
             SimulationConfig config)
      : Simulation(g, profile, shifts, transitions, std::move(config), g.node_count()) {}

  void seed_toxicity();
  void step_hop();
  MetricsSeries run();  // seed + kiter hops, one record per completed week

  // Mean toxicity over the currently counting in-neighbours of v, or nullopt
  // when none counts this hop.
  std::optional<double> avg_incoming_toxicity(NodeId v) const;

  double toxicity(NodeId v) const { return toxicity_.at(v); }
  bool active(NodeId v) const { return assigned_.at(v) != 0; }
  UserCategory category(NodeId v) const { return categories_.at(v); }
  std::size_t hop() const noexcept { return hop_; }
  std::size_t original_node_count() const noexcept { return original_; }
  WeekRecord snapshot_metrics(std::size_t week) const;

  // Per-node rng identities; defaults to node ids. Lets a relabelled graph
  // reproduce another run's draws (testing hook for order independence).
  void set_rng_labels(std::vector<std::uint64_t> labels);

 private:
  const DirectedGraph& graph_;  // caller keeps the graph alive
  ShiftDistribution shifts_;
  TransitionMatrix transitions_;
  SimulationConfig config_;
  std::size_t original_ = 0;
  std::size_t hop_ = 0;

  std::vector<UserCategory> categories_;
  std::vector<std::uint8_t> changing_;
  std::vector<double> toxicity_;
  std::vector<double> next_toxicity_;
  std::vector<std::uint8_t> assigned_;
  std::vector<std::uint64_t> rng_labels_;
  mutable std::vector<double> scratch_;  // neighbour gather buffer; instances
                                         // are not shared across threads

  bool counts_for_average(NodeId u) const;
};

MetricsSeries run_simulation(const DirectedGraph& g, const CategoryProfile& profile,
                             const ShiftDistribution& shifts, const TransitionMatrix& transitions,
                             const SimulationConfig& config,
                             std::size_t original_node_count);

inline MetricsSeries run_simulation(const DirectedGraph& g, const CategoryProfile& profile,
                                    const ShiftDistribution& shifts,
                                    const TransitionMatrix& transitions,
                                    const SimulationConfig& config) {
  return run_simulation(g, profile, shifts, transitions, config, g.node_count());
}

// Header "run_id,week,total_toxicity,mean_toxicity,active_nodes"; floats with
// six decimal places.
void write_metrics_csv(std::ostream& out,
                       const std::vector<std::pair<std::string, MetricsSeries>>& series);
std::vector<std::pair<std::string, MetricsSeries>> load_metrics_csv(std::istream& in);

}  // namespace toxsim
