#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "toxsim/behavior.hpp"
#include "toxsim/graph.hpp"

namespace toxsim {

// One pre-scored post: external user id, time bucket, toxicity in [0, 1].
struct PostRecord {
  std::uint64_t user = 0;
  std::uint32_t bucket = 0;
  double toxicity = 0.0;
};

// CSV with required header "user_id,bucket,toxicity".
std::vector<PostRecord> load_posts_csv(std::istream& in);
void save_posts_csv(std::ostream& out, std::span<const PostRecord> posts);

// How a user's neighbourhood average is taken: mean of per-neighbour means
// (default) or a single mean over all neighbour posts.
enum class NeighborWeighting { UserWeighted, PostWeighted };

struct ShiftSample {
  NodeId user = 0;       // internal id
  std::uint32_t bucket = 0;
  double self_avg = 0.0;
  double neigh_avg = 0.0;
  double shift = 0.0;    // self_avg - neigh_avg
};

struct ShiftComputation {
  std::vector<ShiftSample> samples;
  std::size_t posts_skipped_unresolved = 0;
  std::size_t users_unresolved = 0;
};

// One sample per (user, bucket) where the user posted and at least one
// in-neighbour posted in the same bucket.
ShiftComputation compute_shifts(std::span<const PostRecord> posts, const DirectedGraph& g,
                                const IdMap& ids,
                                NeighborWeighting weighting = NeighborWeighting::UserWeighted);

// Box-plot outlier categorization of mean shifts: above Q3 + factor*IQR is
// Amplifier, below Q1 - factor*IQR is Attenuator, the rest are Copycats.
std::vector<UserCategory> iqr_categorize(std::span<const double> mean_shifts,
                                         double whisker_factor = 1.5);

struct CategoryAssignment {
  std::vector<NodeId> users;  // ascending internal ids
  std::vector<UserCategory> overall;
  // Per user: (bucket, category) in ascending bucket order.
  std::vector<std::vector<std::pair<std::uint32_t, UserCategory>>> sequences;
  std::vector<std::uint8_t> changing;

  std::size_t index_of(NodeId user) const;  // throws if absent
};

// Overall categories from per-user mean shifts plus per-bucket categories
// (IQR applied within each bucket); the changing flag marks users whose
// observed sequence is not constant.
CategoryAssignment build_category_assignment(std::span<const ShiftSample> samples,
                                             double whisker_factor = 1.5);

struct LabelHomophily {
  int label = 0;
  std::size_t within_edges = 0;
  double x = 0.0;          // within-label fraction of labeled edges
  double x_squared = 0.0;  // chance level per the x-vs-x^2 criterion
  double x_all_edges = 0.0;  // same numerator over all edges
  bool homophilous = false;  // x > x^2 + margin
};

struct HomophilyReport {
  std::vector<LabelHomophily> labels;  // ascending label
  std::size_t total_edges = 0;
  std::size_t labeled_edges = 0;   // both endpoints labeled
  std::size_t excluded_edges = 0;  // at least one unlabeled endpoint
  double margin = 0.05;
};

// labels[v] < 0 means unlabeled; edges touching unlabeled nodes are excluded
// from the denominator and counted.
HomophilyReport homophily(const DirectedGraph& g, std::span<const int> labels,
                          double margin = 0.05);

void write_homophily_csv(std::ostream& out, const HomophilyReport& report);
void write_homophily_text(std::ostream& out, const HomophilyReport& report);

struct ShiftExportResult {
  ShiftDistribution distribution;
  // (category, input bin index) pairs that had no samples and were filled
  // with a point mass at shift 0.
  std::vector<std::pair<UserCategory, std::size_t>> point_mass_filled;
};

// 2-D histogram of (input toxicity, shift) per category, normalized per input
// bin; the output round-trips through ShiftDistribution::load_csv.
ShiftExportResult export_shift_distribution(std::span<const ShiftSample> samples,
                                            const CategoryAssignment& assignment,
                                            std::size_t input_bins, std::size_t shift_bins);

struct TransitionEstimate {
  TransitionMatrix matrix;
  double changing_fraction = 0.0;
  std::array<std::size_t, kCategoryCount> pairs_from{};  // observed pairs per source category
  std::size_t changing_users = 0;
  std::size_t users_with_history = 0;  // users observed in >= 2 buckets
};

// Empirical category-change frequencies over consecutive observed buckets of
// changing users; the changing fraction is taken over users with history.
TransitionEstimate category_transitions(const CategoryAssignment& assignment);

}  // namespace toxsim
