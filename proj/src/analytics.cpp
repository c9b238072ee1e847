#include "toxsim/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "toxsim/stats.hpp"

namespace toxsim {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    std::size_t start = field.find_first_not_of(' ');
    fields.push_back(start == std::string::npos ? std::string{} : field.substr(start));
  }
  return fields;
}

[[noreturn]] void posts_fail(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("posts line " + std::to_string(line_no) + ": " + what);
}

std::uint64_t bucket_key(NodeId user, std::uint32_t bucket) {
  return (static_cast<std::uint64_t>(user) << 32) | bucket;
}

struct Aggregate {
  double sum = 0.0;
  std::size_t count = 0;
  double mean() const { return sum / static_cast<double>(count); }
};

}  // namespace

std::vector<PostRecord> load_posts_csv(std::istream& in) {
  std::vector<PostRecord> posts;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv(line);
    if (!saw_header) {
      if (fields.size() != 3 || fields[0] != "user_id" || fields[1] != "bucket" ||
          fields[2] != "toxicity")
        posts_fail(line_no, "expected header \"user_id,bucket,toxicity\"");
      saw_header = true;
      continue;
    }
    if (fields.size() != 3) posts_fail(line_no, "expected three fields");
    PostRecord rec;
    try {
      rec.user = std::stoull(fields[0]);
      const long bucket = std::stol(fields[1]);
      if (bucket < 0) posts_fail(line_no, "bucket must be non-negative");
      rec.bucket = static_cast<std::uint32_t>(bucket);
      rec.toxicity = std::stod(fields[2]);
    } catch (const std::runtime_error&) {
      throw;
    } catch (const std::exception&) {
      posts_fail(line_no, "malformed field");
    }
    if (!(rec.toxicity >= 0.0 && rec.toxicity <= 1.0))
      posts_fail(line_no, "toxicity must lie in [0, 1]");
    posts.push_back(rec);
  }
  if (!saw_header) throw std::runtime_error("posts file is empty (header required)");
  return posts;
}

void save_posts_csv(std::ostream& out, std::span<const PostRecord> posts) {
  out << "user_id,bucket,toxicity\n";
  char buf[96];
  for (const PostRecord& p : posts) {
    std::snprintf(buf, sizeof buf, "%llu,%u,%.6f", static_cast<unsigned long long>(p.user),
                  p.bucket, p.toxicity);
    out << buf << '\n';
  }
}

ShiftComputation compute_shifts(std::span<const PostRecord> posts, const DirectedGraph& g,
                                const IdMap& ids, NeighborWeighting weighting) {
  ShiftComputation result;
  std::unordered_map<std::uint64_t, Aggregate> by_user_bucket;
  by_user_bucket.reserve(posts.size());
  std::unordered_map<std::uint64_t, bool> unresolved_seen;

  for (const PostRecord& p : posts) {
    auto it = ids.external_to_internal.find(p.user);
    if (it == ids.external_to_internal.end() || it->second >= g.node_count()) {
      ++result.posts_skipped_unresolved;
      unresolved_seen.emplace(p.user, true);
      continue;
    }
    auto& agg = by_user_bucket[bucket_key(it->second, p.bucket)];
    agg.sum += p.toxicity;
    agg.count += 1;
  }
  result.users_unresolved = unresolved_seen.size();

  // Deterministic (user, bucket) order.
  std::vector<std::uint64_t> keys;
  keys.reserve(by_user_bucket.size());
  for (const auto& [key, agg] : by_user_bucket) keys.push_back(key);
  std::sort(keys.begin(), keys.end());

  for (std::uint64_t key : keys) {
    const NodeId user = static_cast<NodeId>(key >> 32);
    const std::uint32_t bucket = static_cast<std::uint32_t>(key & 0xFFFFFFFFu);

    double neigh_sum = 0.0;
    std::size_t neigh_count = 0;
    for (NodeId nb : g.in_neighbors(user)) {
      auto it = by_user_bucket.find(bucket_key(nb, bucket));
      if (it == by_user_bucket.end()) continue;
      if (weighting == NeighborWeighting::UserWeighted) {
        neigh_sum += it->second.mean();
        neigh_count += 1;
      } else {
        neigh_sum += it->second.sum;
        neigh_count += it->second.count;
      }
    }
    if (neigh_count == 0) continue;

    ShiftSample s;
    s.user = user;
    s.bucket = bucket;
    s.self_avg = by_user_bucket.at(key).mean();
    s.neigh_avg = neigh_sum / static_cast<double>(neigh_count);
    s.shift = s.self_avg - s.neigh_avg;
    result.samples.push_back(s);
  }
  return result;
}

std::vector<UserCategory> iqr_categorize(std::span<const double> mean_shifts,
                                         double whisker_factor) {
  if (mean_shifts.size() < 4)
    throw std::invalid_argument("IQR categorization needs at least 4 users");
  std::vector<double> sorted(mean_shifts.begin(), mean_shifts.end());
  std::sort(sorted.begin(), sorted.end());
  const BoxWhiskers box = box_whiskers(sorted, whisker_factor);

  std::vector<UserCategory> categories(mean_shifts.size(), UserCategory::Copycat);
  for (std::size_t i = 0; i < mean_shifts.size(); ++i) {
    if (mean_shifts[i] > box.upper)
      categories[i] = UserCategory::Amplifier;
    else if (mean_shifts[i] < box.lower)
      categories[i] = UserCategory::Attenuator;
  }
  return categories;
}

std::size_t CategoryAssignment::index_of(NodeId user) const {
  auto it = std::lower_bound(users.begin(), users.end(), user);
  if (it == users.end() || *it != user) throw std::out_of_range("user not in assignment");
  return static_cast<std::size_t>(it - users.begin());
}

CategoryAssignment build_category_assignment(std::span<const ShiftSample> samples,
                                             double whisker_factor) {
  CategoryAssignment assignment;
  std::map<NodeId, Aggregate> per_user;
  std::map<std::uint32_t, std::vector<std::pair<NodeId, double>>> per_bucket;
  std::map<std::pair<NodeId, std::uint32_t>, Aggregate> per_user_bucket;
  for (const ShiftSample& s : samples) {
    auto& total = per_user[s.user];
    total.sum += s.shift;
    total.count += 1;
    auto& ub = per_user_bucket[{s.user, s.bucket}];
    ub.sum += s.shift;
    ub.count += 1;
  }
  for (const auto& [key, agg] : per_user_bucket)
    per_bucket[key.second].emplace_back(key.first, agg.mean());

  assignment.users.reserve(per_user.size());
  std::vector<double> means;
  means.reserve(per_user.size());
  for (const auto& [user, agg] : per_user) {
    assignment.users.push_back(user);
    means.push_back(agg.mean());
  }
  assignment.overall = iqr_categorize(means, whisker_factor);
  assignment.sequences.resize(assignment.users.size());

  for (const auto& [bucket, entries] : per_bucket) {
    std::vector<double> bucket_means;
    bucket_means.reserve(entries.size());
    for (const auto& [user, mean] : entries) bucket_means.push_back(mean);
    if (bucket_means.size() < 4) continue;  // too few users to categorize this bucket
    auto categories = iqr_categorize(bucket_means, whisker_factor);
    for (std::size_t i = 0; i < entries.size(); ++i)
      assignment.sequences[assignment.index_of(entries[i].first)].emplace_back(bucket,
                                                                               categories[i]);
  }

  assignment.changing.assign(assignment.users.size(), 0);
  for (std::size_t i = 0; i < assignment.users.size(); ++i) {
    const auto& seq = assignment.sequences[i];
    for (std::size_t j = 1; j < seq.size(); ++j)
      if (seq[j].second != seq[0].second) {
        assignment.changing[i] = 1;
        break;
      }
  }
  return assignment;
}

HomophilyReport homophily(const DirectedGraph& g, std::span<const int> labels, double margin) {
  if (labels.size() != g.node_count())
    throw std::invalid_argument("label count must equal node count");

  HomophilyReport report;
  report.margin = margin;
  report.total_edges = g.edge_count();
  std::map<int, std::size_t> within;
  for (NodeId u = 0; u < g.node_count(); ++u) {
    if (labels[u] >= 0) within.emplace(labels[u], 0);  // ensure labels appear in the report
    for (NodeId v : g.out_neighbors(u)) {
      if (labels[u] < 0 || labels[v] < 0) {
        ++report.excluded_edges;
        continue;
      }
      ++report.labeled_edges;
      if (labels[u] == labels[v]) ++within[labels[u]];
    }
  }
  if (report.labeled_edges == 0) throw std::runtime_error("no edge has both endpoints labeled");

  for (const auto& [label, count] : within) {
    LabelHomophily row;
    row.label = label;
    row.within_edges = count;
    row.x = static_cast<double>(count) / static_cast<double>(report.labeled_edges);
    row.x_squared = row.x * row.x;
    row.x_all_edges = static_cast<double>(count) / static_cast<double>(report.total_edges);
    row.homophilous = row.x > row.x_squared + margin;
    report.labels.push_back(row);
  }
  return report;
}

void write_homophily_csv(std::ostream& out, const HomophilyReport& report) {
  out << "label,within_edges,x,x_squared,x_all_edges,homophilous\n";
  char buf[160];
  for (const LabelHomophily& row : report.labels) {
    std::snprintf(buf, sizeof buf, "%d,%zu,%.6f,%.6f,%.6f,%d", row.label, row.within_edges,
                  row.x, row.x_squared, row.x_all_edges, row.homophilous ? 1 : 0);
    out << buf << '\n';
  }
}

void write_homophily_text(std::ostream& out, const HomophilyReport& report) {
  out << "homophily over " << report.labeled_edges << " labeled edges (" << report.excluded_edges
      << " excluded, " << report.total_edges << " total), margin " << report.margin << "\n";
  char buf[200];
  for (const LabelHomophily& row : report.labels) {
    std::snprintf(buf, sizeof buf,
                  "  label %d: x = %.6f, x^2 = %.6f, x(all edges) = %.6f -> %s", row.label,
                  row.x, row.x_squared, row.x_all_edges,
                  row.homophilous ? "homophily" : "no homophily");
    out << buf << '\n';
  }
}

ShiftExportResult export_shift_distribution(std::span<const ShiftSample> samples,
                                            const CategoryAssignment& assignment,
                                            std::size_t input_bins, std::size_t shift_bins) {
  if (input_bins == 0 || shift_bins == 0)
    throw std::invalid_argument("bin counts must be positive");

  std::array<std::vector<std::vector<std::size_t>>, kCategoryCount> counts;
  for (auto& per_cat : counts)
    per_cat.assign(input_bins, std::vector<std::size_t>(shift_bins, 0));

  auto input_bin_of = [&](double x) {
    auto idx = static_cast<std::size_t>(x * static_cast<double>(input_bins));
    return std::min(idx, input_bins - 1);  // right-closed last bin
  };
  auto shift_bin_of = [&](double s) {
    auto idx = static_cast<std::size_t>((s + 1.0) / 2.0 * static_cast<double>(shift_bins));
    return std::min(idx, shift_bins - 1);
  };

  std::array<std::size_t, kCategoryCount> totals{};
  for (const ShiftSample& s : samples) {
    const UserCategory cat = assignment.overall[assignment.index_of(s.user)];
    const auto c = static_cast<std::size_t>(cat);
    ++counts[c][input_bin_of(s.neigh_avg)][shift_bin_of(s.shift)];
    ++totals[c];
  }
  for (std::size_t c = 0; c < kCategoryCount; ++c)
    if (totals[c] == 0)
      throw std::runtime_error(std::string("no shift samples for category ") +
                               std::string(to_string(kAllCategories[c])));

  ShiftExportResult result;
  std::array<std::vector<ShiftDistribution::InputBin>, kCategoryCount> bins;
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    for (std::size_t i = 0; i < input_bins; ++i) {
      ShiftDistribution::InputBin ib;
      ib.lo = static_cast<double>(i) / static_cast<double>(input_bins);
      ib.hi = static_cast<double>(i + 1) / static_cast<double>(input_bins);
      std::size_t bin_total = 0;
      for (std::size_t j = 0; j < shift_bins; ++j) bin_total += counts[c][i][j];
      if (bin_total == 0) {
        ib.shifts.push_back({0.0, 0.0, 1.0});
        result.point_mass_filled.emplace_back(kAllCategories[c], i);
      } else {
        for (std::size_t j = 0; j < shift_bins; ++j) {
          if (counts[c][i][j] == 0) continue;
          ShiftBin sb;
          sb.lo = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(shift_bins);
          sb.hi = -1.0 + 2.0 * static_cast<double>(j + 1) / static_cast<double>(shift_bins);
          sb.density = static_cast<double>(counts[c][i][j]) / static_cast<double>(bin_total);
          ib.shifts.push_back(sb);
        }
      }
      bins[c].push_back(std::move(ib));
    }
  }
  result.distribution = ShiftDistribution::from_bins(std::move(bins));
  return result;
}

TransitionEstimate category_transitions(const CategoryAssignment& assignment) {
  TransitionEstimate est;
  std::array<std::array<std::size_t, kCategoryCount>, kCategoryCount> moves{};

  for (std::size_t i = 0; i < assignment.users.size(); ++i) {
    const auto& seq = assignment.sequences[i];
    if (seq.size() < 2) continue;
    ++est.users_with_history;
    if (!assignment.changing[i]) continue;
    ++est.changing_users;
    for (std::size_t j = 1; j < seq.size(); ++j) {
      const auto from = static_cast<std::size_t>(seq[j - 1].second);
      const auto to = static_cast<std::size_t>(seq[j].second);
      ++moves[from][to];
      ++est.pairs_from[from];
    }
  }
  if (est.users_with_history == 0)
    throw std::runtime_error("no user was observed in two or more buckets");

  for (UserCategory from : kAllCategories) {
    const auto f = static_cast<std::size_t>(from);
    if (est.pairs_from[f] == 0) continue;
    for (UserCategory to : kAllCategories) {
      if (from == to) continue;
      const auto t = static_cast<std::size_t>(to);
      est.matrix.set(from, to,
                     static_cast<double>(moves[f][t]) / static_cast<double>(est.pairs_from[f]));
    }
  }
  est.changing_fraction =
      static_cast<double>(est.changing_users) / static_cast<double>(est.users_with_history);
  return est;
}

}  // namespace toxsim
