#include "toxsim/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace toxsim {

namespace {

constexpr std::uint64_t kSeedSelectTag = 11;
constexpr std::uint64_t kSeedValueTag = 12;
constexpr std::uint64_t kHopTag = 13;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

Simulation::Simulation(const DirectedGraph& g, const CategoryProfile& profile,
                       const ShiftDistribution& shifts, const TransitionMatrix& transitions,
                       SimulationConfig config, std::size_t original_node_count)
    : graph_(g),
      shifts_(shifts),
      transitions_(transitions),
      config_(std::move(config)),
      original_(original_node_count) {
  if (original_ > g.node_count())
    throw std::invalid_argument("original node count exceeds graph size");
  if (profile.category.size() != original_ || profile.changing.size() != original_)
    throw std::invalid_argument("category profile must cover exactly the original nodes");
  if (config_.kiter < 1) throw std::invalid_argument("kiter must be at least 1");
  if (config_.hops_per_week < 1) throw std::invalid_argument("hops_per_week must be at least 1");
  if (!(config_.initial_toxicity_lo > 0.0 &&
        config_.initial_toxicity_lo <= config_.initial_toxicity_hi &&
        config_.initial_toxicity_hi <= 1.0))
    throw std::invalid_argument("initial toxicity range must satisfy 0 < lo <= hi <= 1");

  categories_ = profile.category;
  changing_ = profile.changing;
  toxicity_.assign(g.node_count(), 0.0);
  next_toxicity_.assign(g.node_count(), 0.0);
  assigned_.assign(g.node_count(), 0);
  // Peace-bots are permanently active sources of toxicity 0.
  for (std::size_t v = original_; v < g.node_count(); ++v) assigned_[v] = 1;
  rng_labels_.resize(g.node_count());
  for (std::size_t v = 0; v < g.node_count(); ++v) rng_labels_[v] = v;
}

void Simulation::set_rng_labels(std::vector<std::uint64_t> labels) {
  if (labels.size() != graph_.node_count())
    throw std::invalid_argument("rng label count must equal node count");
  rng_labels_ = std::move(labels);
}

void Simulation::seed_toxicity() {
  std::vector<NodeId> chosen;
  if (const auto* frac = std::get_if<double>(&config_.seeds.value)) {
    if (!(*frac > 0.0 && *frac <= 1.0))
      throw std::invalid_argument("seed fraction must lie in (0, 1]");
    const std::size_t count = std::min<std::size_t>(
        static_cast<std::size_t>(std::llround(*frac * original_)), original_);
    if (count == 0) throw std::invalid_argument("seed fraction selects no node");
    std::vector<NodeId> ids(original_);
    for (std::size_t i = 0; i < original_; ++i) ids[i] = static_cast<NodeId>(i);
    RngStream sel(derive_key(config_.rng_seed, kSeedSelectTag));
    for (std::size_t i = 0; i < count && i + 1 < ids.size(); ++i) {
      const std::size_t j = i + static_cast<std::size_t>(sel.uniform_index(ids.size() - i));
      std::swap(ids[i], ids[j]);
    }
    chosen.assign(ids.begin(), ids.begin() + count);
  } else {
    chosen = std::get<std::vector<NodeId>>(config_.seeds.value);
    if (chosen.empty()) throw std::invalid_argument("explicit seed list is empty");
    for (NodeId v : chosen)
      if (v >= original_) throw std::invalid_argument("seed node id out of range");
  }

  for (NodeId v : chosen) {
    RngStream value_rng(derive_key(config_.rng_seed, kSeedValueTag, rng_labels_[v]));
    toxicity_[v] = value_rng.uniform(config_.initial_toxicity_lo, config_.initial_toxicity_hi);
    assigned_[v] = 1;
  }
}

bool Simulation::counts_for_average(NodeId u) const {
  if (!assigned_[u]) return false;
  if (u >= original_) return true;  // peace-bot
  return config_.zero_toxicity_stays_active || toxicity_[u] > 0.0;
}

std::optional<double> Simulation::avg_incoming_toxicity(NodeId v) const {
  scratch_.clear();
  for (NodeId u : graph_.in_neighbors(v))
    if (counts_for_average(u)) scratch_.push_back(toxicity_[u]);
  if (scratch_.empty()) return std::nullopt;
  // Summing in value order makes the average a function of the multiset of
  // neighbour toxicities, so relabelling nodes cannot perturb low bits.
  std::sort(scratch_.begin(), scratch_.end());
  double sum = 0.0;
  for (double t : scratch_) sum += t;
  return sum / static_cast<double>(scratch_.size());
}

void Simulation::step_hop() {
  ++hop_;
  next_toxicity_ = toxicity_;
  std::vector<NodeId> updated;
  const bool transition_now = config_.cadence == CategoryChangeCadence::PerHop ||
                              hop_ % config_.hops_per_week == 0;

  for (NodeId v = 0; v < original_; ++v) {
    const auto avg = avg_incoming_toxicity(v);  // reads the pre-hop snapshot
    if (!avg) continue;
    RngStream node_rng(derive_key(config_.rng_seed, kHopTag, hop_, rng_labels_[v]));
    const double shift = shifts_.sample(categories_[v], *avg, node_rng);
    next_toxicity_[v] = clamp01(*avg + shift);
    updated.push_back(v);
    if (transition_now)
      categories_[v] = step_category(categories_[v], changing_[v] != 0, transitions_, node_rng);
  }

  toxicity_.swap(next_toxicity_);
  for (NodeId v : updated) assigned_[v] = 1;
}

WeekRecord Simulation::snapshot_metrics(std::size_t week) const {
  WeekRecord rec;
  rec.week = week;
  for (std::size_t v = 0; v < original_; ++v) {
    rec.total_toxicity += toxicity_[v];
    rec.active_nodes += assigned_[v];
  }
  rec.mean_toxicity = original_ > 0 ? rec.total_toxicity / static_cast<double>(original_) : 0.0;
  return rec;
}

MetricsSeries Simulation::run() {
  seed_toxicity();
  MetricsSeries series;
  for (std::size_t h = 1; h <= config_.kiter; ++h) {
    step_hop();
    if (h % config_.hops_per_week == 0)
      series.rows.push_back(snapshot_metrics(h / config_.hops_per_week));
  }
  return series;
}

MetricsSeries run_simulation(const DirectedGraph& g, const CategoryProfile& profile,
                             const ShiftDistribution& shifts, const TransitionMatrix& transitions,
                             const SimulationConfig& config, std::size_t original_node_count) {
  Simulation sim(g, profile, shifts, transitions, config, original_node_count);
  return sim.run();
}

void write_metrics_csv(std::ostream& out,
                       const std::vector<std::pair<std::string, MetricsSeries>>& series) {
  out << "run_id,week,total_toxicity,mean_toxicity,active_nodes\n";
  char buf[128];
  for (const auto& [label, s] : series) {
    for (const WeekRecord& r : s.rows) {
      std::snprintf(buf, sizeof buf, "%s,%zu,%.6f,%.6f,%zu", label.c_str(), r.week,
                    r.total_toxicity, r.mean_toxicity, r.active_nodes);
      out << buf << '\n';
    }
  }
}

std::vector<std::pair<std::string, MetricsSeries>> load_metrics_csv(std::istream& in) {
  std::vector<std::pair<std::string, MetricsSeries>> result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("run_id,", 0) == 0) continue;
    std::istringstream ss(line);
    std::string label, field;
    WeekRecord rec;
    try {
      if (!std::getline(ss, label, ',')) throw std::runtime_error("missing run_id");
      if (!std::getline(ss, field, ',')) throw std::runtime_error("missing week");
      rec.week = std::stoul(field);
      if (!std::getline(ss, field, ',')) throw std::runtime_error("missing total");
      rec.total_toxicity = std::stod(field);
      if (!std::getline(ss, field, ',')) throw std::runtime_error("missing mean");
      rec.mean_toxicity = std::stod(field);
      if (!std::getline(ss, field, ',')) throw std::runtime_error("missing active count");
      rec.active_nodes = std::stoul(field);
    } catch (const std::exception& e) {
      throw std::runtime_error("metrics line " + std::to_string(line_no) + ": " + e.what());
    }
    if (result.empty() || result.back().first != label) result.push_back({label, {}});
    result.back().second.rows.push_back(rec);
  }
  return result;
}

}  // namespace toxsim
