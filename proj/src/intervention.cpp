#include "toxsim/intervention.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "toxsim/rng.hpp"

namespace toxsim {

namespace {
constexpr std::uint64_t kDeployStreamTag = 21;
}

std::string_view to_string(PlacementStrategy s) {
  switch (s) {
    case PlacementStrategy::Baseline: return "baseline";
    case PlacementStrategy::RandomPlacement: return "rp";
    case PlacementStrategy::LowestIndegree: return "li";
  }
  return "unknown";
}

std::optional<PlacementStrategy> strategy_from_string(std::string_view name) {
  if (name == "baseline") return PlacementStrategy::Baseline;
  if (name == "rp" || name == "random") return PlacementStrategy::RandomPlacement;
  if (name == "li" || name == "lowest-indegree") return PlacementStrategy::LowestIndegree;
  return std::nullopt;
}

BotDeployment deploy_bots(const DirectedGraph& g, std::size_t n_bots, PlacementStrategy strategy,
                          std::uint64_t seed) {
  const std::size_t n = g.node_count();
  if (strategy == PlacementStrategy::Baseline)
    throw std::invalid_argument("baseline has no bots to deploy");
  if (n_bots < 1 || n_bots > n)
    throw std::invalid_argument("bot count must lie in [1, node count]");

  std::vector<NodeId> targets;
  if (strategy == PlacementStrategy::RandomPlacement) {
    std::vector<NodeId> ids(n);
    std::iota(ids.begin(), ids.end(), NodeId{0});
    RngStream rng(derive_key(seed, kDeployStreamTag));
    for (std::size_t i = 0; i < n_bots && i + 1 < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
      std::swap(ids[i], ids[j]);
    }
    targets.assign(ids.begin(), ids.begin() + n_bots);
  } else {
    std::vector<NodeId> ids(n);
    std::iota(ids.begin(), ids.end(), NodeId{0});
    // Indegrees taken on the original graph only.
    std::sort(ids.begin(), ids.end(), [&](NodeId a, NodeId b) {
      const std::size_t da = g.indegree(a), db = g.indegree(b);
      return da != db ? da < db : a < b;
    });
    targets.assign(ids.begin(), ids.begin() + n_bots);
  }

  BotDeployment dep;
  dep.original_node_count = n;
  dep.strategy = strategy;
  dep.seed = seed;
  dep.targets = targets;
  dep.bot_nodes.resize(n_bots);

  auto edges = g.edges();
  edges.reserve(edges.size() + n_bots);
  for (std::size_t i = 0; i < n_bots; ++i) {
    const NodeId bot = static_cast<NodeId>(n + i);
    dep.bot_nodes[i] = bot;
    edges.emplace_back(bot, targets[i]);
  }
  dep.augmented = DirectedGraph::from_edges(n + n_bots, std::move(edges));
  return dep;
}

double percentage_reduction(double baseline_total, double intervened_total) {
  if (!(baseline_total > 0.0))
    throw std::invalid_argument("baseline total toxicity must be positive");
  return 100.0 * (baseline_total - intervened_total) / baseline_total;
}

double bot_effect_on_average(double avg, std::size_t indeg) {
  return avg * static_cast<double>(indeg) / static_cast<double>(indeg + 1);
}

void write_deployment_csv(std::ostream& out, const std::vector<BotDeployment>& deployments) {
  out << "bot_id,target_id,strategy,seed\n";
  for (const BotDeployment& dep : deployments)
    for (std::size_t i = 0; i < dep.bot_nodes.size(); ++i)
      out << dep.bot_nodes[i] << ',' << dep.targets[i] << ',' << to_string(dep.strategy) << ','
          << dep.seed << '\n';
}

}  // namespace toxsim
