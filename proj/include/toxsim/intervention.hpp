#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "toxsim/graph.hpp"

namespace toxsim {

enum class PlacementStrategy { Baseline, RandomPlacement, LowestIndegree };

std::string_view to_string(PlacementStrategy s);
std::optional<PlacementStrategy> strategy_from_string(std::string_view name);

// Peace-bots appended after the original nodes, one outgoing edge each to a
// distinct original target. The augmented graph restricted to the original
// nodes equals the input graph.
struct BotDeployment {
  std::size_t original_node_count = 0;
  std::vector<NodeId> bot_nodes;
  std::vector<NodeId> targets;
  DirectedGraph augmented;
  PlacementStrategy strategy = PlacementStrategy::Baseline;
  std::uint64_t seed = 0;
};

// RandomPlacement samples targets uniformly without replacement (a fixed seed
// yields nested target sets across growing n_bots). LowestIndegree picks the
// n_bots nodes with the smallest indegree on the original graph, ties broken
// by ascending node id.
BotDeployment deploy_bots(const DirectedGraph& g, std::size_t n_bots, PlacementStrategy strategy,
                          std::uint64_t seed);

// 100 * (baseline - intervened) / baseline; negative when the intervention
// backfired.
double percentage_reduction(double baseline_total, double intervened_total);

// Average incoming toxicity after one zero-toxicity source joins a node whose
// current average is `avg` over `indeg` neighbours: avg * indeg / (indeg + 1).
double bot_effect_on_average(double avg, std::size_t indeg);

// Manifest rows "bot_id,target_id,strategy,seed".
void write_deployment_csv(std::ostream& out, const std::vector<BotDeployment>& deployments);

}  // namespace toxsim
