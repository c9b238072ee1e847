#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "toxsim/diffusion.hpp"
#include "toxsim/intervention.hpp"

using namespace toxsim;

namespace {

// All three categories emit a fixed shift regardless of the input.
ShiftDistribution point_mass(double shift) {
  std::array<std::vector<ShiftDistribution::InputBin>, kCategoryCount> bins;
  for (auto& per_cat : bins) per_cat = {{0.0, 1.0, {{shift, shift, 1.0}}}};
  return ShiftDistribution::from_bins(std::move(bins));
}

CategoryProfile all_copycats(std::size_t n) {
  CategoryProfile profile;
  profile.category.assign(n, UserCategory::Copycat);
  profile.changing.assign(n, 0);
  return profile;
}

SimulationConfig basic_config(std::size_t kiter, std::size_t hpw, SeedSpec seeds,
                              double lo = 0.8, double hi = 0.8) {
  SimulationConfig config;
  config.kiter = kiter;
  config.hops_per_week = hpw;
  config.seeds = std::move(seeds);
  config.initial_toxicity_lo = lo;
  config.initial_toxicity_hi = hi;
  config.rng_seed = 17;
  return config;
}

}  // namespace

TEST_CASE("explicit seeding with a degenerate range is exact") {
  const DirectedGraph g = DirectedGraph::from_edges(4, {{0, 1}});
  Simulation sim(g, all_copycats(4), point_mass(0.0), TransitionMatrix::defaults(),
                 basic_config(1, 1, SeedSpec::nodes({3})));
  sim.seed_toxicity();
  CHECK(sim.toxicity(3) == 0.8);
  CHECK(sim.active(3));
  for (NodeId v : {0u, 1u, 2u}) {
    CHECK(sim.toxicity(v) == 0.0);
    CHECK_FALSE(sim.active(v));
  }
}

TEST_CASE("fractional seeding rounds to a node count") {
  const DirectedGraph g = generate_er(10000, 0.0005, 3);
  Simulation sim(g, all_copycats(10000), point_mass(0.0), TransitionMatrix::defaults(),
                 basic_config(1, 1, SeedSpec::fraction(0.01)));
  sim.seed_toxicity();
  std::size_t active = 0;
  for (NodeId v = 0; v < 10000; ++v) active += sim.active(v);
  CHECK(active == 100);
}

TEST_CASE("seeded values stay inside the configured range") {
  const DirectedGraph g = DirectedGraph::from_edges(10000, {});
  Simulation sim(g, all_copycats(10000), point_mass(0.0), TransitionMatrix::defaults(),
                 basic_config(1, 1, SeedSpec::fraction(1.0), 0.5, 1.0));
  sim.seed_toxicity();
  for (NodeId v = 0; v < 10000; ++v) {
    CHECK(sim.toxicity(v) >= 0.5);
    CHECK(sim.toxicity(v) <= 1.0);
  }
}

TEST_CASE("empty seed specs are rejected") {
  const DirectedGraph g = DirectedGraph::from_edges(4, {{0, 1}});
  Simulation a(g, all_copycats(4), point_mass(0.0), TransitionMatrix::defaults(),
               basic_config(1, 1, SeedSpec::nodes({})));
  CHECK_THROWS_AS(a.seed_toxicity(), std::invalid_argument);
  Simulation b(g, all_copycats(4), point_mass(0.0), TransitionMatrix::defaults(),
               basic_config(1, 1, SeedSpec::fraction(0.01)));  // rounds to zero nodes
  CHECK_THROWS_AS(b.seed_toxicity(), std::invalid_argument);
}

TEST_CASE("config validation") {
  const DirectedGraph g = DirectedGraph::from_edges(4, {{0, 1}});
  auto cfg = basic_config(1, 1, SeedSpec::nodes({0}));
  cfg.kiter = 0;
  CHECK_THROWS_AS(Simulation(g, all_copycats(4), point_mass(0.0),
                             TransitionMatrix::defaults(), cfg),
                  std::invalid_argument);
  cfg = basic_config(1, 1, SeedSpec::nodes({0}));
  cfg.initial_toxicity_lo = 0.0;  // must be strictly positive
  CHECK_THROWS_AS(Simulation(g, all_copycats(4), point_mass(0.0),
                             TransitionMatrix::defaults(), cfg),
                  std::invalid_argument);
}

TEST_CASE("average incoming toxicity over active in-neighbours") {
  // 0 -> 2, 1 -> 2, 3 -> 2
  const DirectedGraph g = DirectedGraph::from_edges(4, {{0, 2}, {1, 2}, {3, 2}});
  CategoryProfile profile = all_copycats(4);
  SimulationConfig config = basic_config(1, 1, SeedSpec::nodes({0}));
  Simulation sim(g, profile, point_mass(0.0), TransitionMatrix::defaults(), config);

  CHECK_FALSE(sim.avg_incoming_toxicity(2).has_value());  // nothing active yet
  sim.seed_toxicity();                                    // node 0 at 0.8
  CHECK(sim.avg_incoming_toxicity(2).value() == doctest::Approx(0.8));
  CHECK_FALSE(sim.avg_incoming_toxicity(0).has_value());
}

TEST_CASE("a permanently silent peace-bot lowers the average") {
  // Four active users at 0.6 plus one bot feed node 4.
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId u = 0; u < 4; ++u) edges.emplace_back(u, 4);
  const DirectedGraph base = DirectedGraph::from_edges(5, std::move(edges));

  // Find a deployment seed whose random target is node 4.
  BotDeployment hit = deploy_bots(base, 1, PlacementStrategy::RandomPlacement, 1);
  for (std::uint64_t s = 2; hit.targets[0] != 4; ++s)
    hit = deploy_bots(base, 1, PlacementStrategy::RandomPlacement, s);

  SimulationConfig config = basic_config(1, 1, SeedSpec::nodes({0, 1, 2, 3}), 0.6, 0.6);
  Simulation sim(hit.augmented, all_copycats(5), point_mass(0.0),
                 TransitionMatrix::defaults(), config, 5);
  sim.seed_toxicity();
  CHECK(sim.avg_incoming_toxicity(4).value() == doctest::Approx(0.48));  // 0.6*4/5
}

TEST_CASE("inactive in-neighbours are excluded from the average") {
  const DirectedGraph g = DirectedGraph::from_edges(3, {{0, 2}, {1, 2}});
  SimulationConfig config = basic_config(1, 1, SeedSpec::nodes({1}), 0.7, 0.7);
  Simulation sim(g, all_copycats(3), point_mass(0.0), TransitionMatrix::defaults(), config);
  sim.seed_toxicity();
  CHECK(sim.avg_incoming_toxicity(2).value() == doctest::Approx(0.7));
}

TEST_CASE("hand-traced chain: toxicity copies forward hop by hop") {
  const DirectedGraph g = DirectedGraph::from_edges(3, {{0, 1}, {1, 2}});
  SimulationConfig config = basic_config(2, 1, SeedSpec::nodes({0}));
  Simulation sim(g, all_copycats(3), point_mass(0.0), TransitionMatrix::defaults(), config);
  sim.seed_toxicity();
  sim.step_hop();
  CHECK(sim.toxicity(0) == 0.8);
  CHECK(sim.toxicity(1) == 0.8);
  CHECK(sim.toxicity(2) == 0.0);
  CHECK_FALSE(sim.active(2));  // node 1 was inactive in the pre-hop snapshot
  sim.step_hop();
  CHECK(sim.toxicity(0) == 0.8);
  CHECK(sim.toxicity(1) == 0.8);
  CHECK(sim.toxicity(2) == 0.8);
}

TEST_CASE("shifts clamp to the unit interval") {
  const DirectedGraph g = DirectedGraph::from_edges(2, {{0, 1}});
  {
    SimulationConfig config = basic_config(1, 1, SeedSpec::nodes({0}), 0.9, 0.9);
    Simulation sim(g, all_copycats(2), point_mass(0.3), TransitionMatrix::defaults(), config);
    sim.seed_toxicity();
    sim.step_hop();
    CHECK(sim.toxicity(1) == 1.0);
  }
  {
    SimulationConfig config = basic_config(1, 1, SeedSpec::nodes({0}), 0.1, 0.1);
    Simulation sim(g, all_copycats(2), point_mass(-0.3), TransitionMatrix::defaults(), config);
    sim.seed_toxicity();
    sim.step_hop();
    CHECK(sim.toxicity(1) == 0.0);
    CHECK(sim.active(1));  // clamped to zero but still assigned
  }
}

TEST_CASE("an isolated node never changes") {
  const DirectedGraph g = DirectedGraph::from_edges(3, {{1, 2}});
  SimulationConfig config = basic_config(10, 1, SeedSpec::nodes({0, 1}));
  Simulation sim(g, all_copycats(3), point_mass(0.05), TransitionMatrix::defaults(), config);
  sim.seed_toxicity();
  const double before = sim.toxicity(0);
  for (int i = 0; i < 10; ++i) sim.step_hop();
  CHECK(sim.toxicity(0) == before);
}

TEST_CASE("zero-shift fixpoint on a strongly connected cycle") {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId v = 0; v < 100; ++v) edges.emplace_back(v, (v + 1) % 100);
  const DirectedGraph g = DirectedGraph::from_edges(100, std::move(edges));
  SimulationConfig config = basic_config(32, 4, SeedSpec::fraction(1.0));
  const MetricsSeries series = run_simulation(g, all_copycats(100), point_mass(0.0),
                                              TransitionMatrix::defaults(), config);
  REQUIRE(series.rows.size() == 8);
  for (const WeekRecord& r : series.rows) {
    CHECK(std::abs(r.total_toxicity - 80.0) <= 1e-9);
    CHECK(r.active_nodes == 100);
  }
}

TEST_CASE("metrics are recorded once per completed week") {
  const DirectedGraph g = DirectedGraph::from_edges(3, {{0, 1}, {1, 2}, {2, 0}});
  {
    SimulationConfig config = basic_config(1, 1, SeedSpec::nodes({0}));
    const MetricsSeries s = run_simulation(g, all_copycats(3), point_mass(0.0),
                                           TransitionMatrix::defaults(), config);
    REQUIRE(s.rows.size() == 1);
    CHECK(s.rows[0].week == 1);
  }
  {
    SimulationConfig config = basic_config(10, 4, SeedSpec::nodes({0}));
    const MetricsSeries s = run_simulation(g, all_copycats(3), point_mass(0.0),
                                           TransitionMatrix::defaults(), config);
    REQUIRE(s.rows.size() == 2);  // hops 4 and 8; the partial week is not recorded
    CHECK(s.rows[0].week == 1);
    CHECK(s.rows[1].week == 2);
    for (const WeekRecord& r : s.rows)
      CHECK(r.total_toxicity == doctest::Approx(r.mean_toxicity * 3.0).epsilon(1e-12));
  }
}

TEST_CASE("fixed seeds reproduce bit-identical runs") {
  const DirectedGraph g = generate_er(400, 0.01, 5);
  const CategoryProfile profile = assign_categories(g, {}, 0.47, 6);
  const ShiftDistribution shifts = ShiftDistribution::synthetic_default();
  const TransitionMatrix m = TransitionMatrix::defaults();
  SimulationConfig config = basic_config(16, 4, SeedSpec::fraction(0.05), 0.5, 1.0);

  const MetricsSeries a = run_simulation(g, profile, shifts, m, config);
  const MetricsSeries b = run_simulation(g, profile, shifts, m, config);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].total_toxicity == b.rows[i].total_toxicity);
    CHECK(a.rows[i].active_nodes == b.rows[i].active_nodes);
  }

  std::ostringstream csv_a, csv_b;
  write_metrics_csv(csv_a, {{"run", a}});
  write_metrics_csv(csv_b, {{"run", b}});
  CHECK(csv_a.str() == csv_b.str());
}

TEST_CASE("toxicities stay in [0,1] through a noisy run") {
  const DirectedGraph g = generate_er(300, 0.02, 9);
  const CategoryProfile profile = assign_categories(g, {0.3, 0.3, 0.4}, 0.5, 2);
  const ShiftDistribution shifts = ShiftDistribution::synthetic_default();
  SimulationConfig config = basic_config(20, 1, SeedSpec::fraction(0.1), 0.5, 1.0);
  Simulation sim(g, profile, shifts, TransitionMatrix::defaults(), config);
  sim.seed_toxicity();
  for (int hop = 0; hop < 20; ++hop) {
    sim.step_hop();
    for (NodeId v = 0; v < g.node_count(); ++v) {
      REQUIRE(sim.toxicity(v) >= 0.0);
      REQUIRE(sim.toxicity(v) <= 1.0);
    }
  }
}

TEST_CASE("relabelling nodes with matching rng labels permutes the state") {
  const std::size_t n = 60;
  const DirectedGraph g = generate_er(n, 0.06, 21);

  // Permutation: reverse the ids.
  std::vector<NodeId> perm(n);
  for (std::size_t v = 0; v < n; ++v) perm[v] = static_cast<NodeId>(n - 1 - v);
  std::vector<std::pair<NodeId, NodeId>> mapped;
  for (const auto& [u, v] : g.edges()) mapped.emplace_back(perm[u], perm[v]);
  const DirectedGraph h = DirectedGraph::from_edges(n, std::move(mapped));

  const CategoryProfile profile = assign_categories(g, {0.2, 0.2, 0.6}, 0.0, 4);
  CategoryProfile permuted_profile;
  permuted_profile.category.resize(n);
  permuted_profile.changing.assign(n, 0);
  for (std::size_t v = 0; v < n; ++v) permuted_profile.category[perm[v]] = profile.category[v];

  const ShiftDistribution shifts = ShiftDistribution::synthetic_default();
  const TransitionMatrix m = TransitionMatrix::defaults();

  SimulationConfig config = basic_config(6, 1, SeedSpec::nodes({0, 1, 2}), 0.5, 1.0);
  Simulation sim_a(g, profile, shifts, m, config);

  SimulationConfig config_b = config;
  config_b.seeds = SeedSpec::nodes({perm[0], perm[1], perm[2]});
  Simulation sim_b(h, permuted_profile, shifts, m, config_b);
  std::vector<std::uint64_t> labels(n);
  for (std::size_t v = 0; v < n; ++v) labels[perm[v]] = v;  // original identities
  sim_b.set_rng_labels(labels);

  sim_a.seed_toxicity();
  sim_b.seed_toxicity();
  for (int hop = 0; hop < 6; ++hop) {
    sim_a.step_hop();
    sim_b.step_hop();
  }
  for (std::size_t v = 0; v < n; ++v) CHECK(sim_a.toxicity(v) == sim_b.toxicity(perm[v]));
}

TEST_CASE("zero-clamped nodes can be silenced via the activity flag") {
  // 0 -> 1 -> 2; node 1's shift forces it to zero.
  const DirectedGraph g = DirectedGraph::from_edges(3, {{0, 1}, {1, 2}});
  CategoryProfile profile = all_copycats(3);
  profile.category[1] = UserCategory::Attenuator;
  std::array<std::vector<ShiftDistribution::InputBin>, kCategoryCount> bins;
  bins[static_cast<std::size_t>(UserCategory::Amplifier)] = {{0.0, 1.0, {{0.0, 0.0, 1.0}}}};
  bins[static_cast<std::size_t>(UserCategory::Copycat)] = {{0.0, 1.0, {{0.0, 0.0, 1.0}}}};
  bins[static_cast<std::size_t>(UserCategory::Attenuator)] = {{0.0, 1.0, {{-1.0, -1.0, 1.0}}}};
  const ShiftDistribution shifts = ShiftDistribution::from_bins(std::move(bins));

  for (bool stays_active : {true, false}) {
    SimulationConfig config = basic_config(2, 1, SeedSpec::nodes({0}));
    config.zero_toxicity_stays_active = stays_active;
    Simulation sim(g, profile, shifts, TransitionMatrix::defaults(), config);
    sim.seed_toxicity();
    sim.step_hop();  // node 1 becomes active at 0
    CHECK(sim.toxicity(1) == 0.0);
    sim.step_hop();
    if (stays_active) {
      CHECK(sim.active(2));  // node 1 counted with toxicity 0
      CHECK(sim.toxicity(2) == 0.0);
    } else {
      CHECK_FALSE(sim.active(2));  // a zeroed node no longer spreads
    }
  }
}
