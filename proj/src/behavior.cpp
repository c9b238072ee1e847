#include "toxsim/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace toxsim {

namespace {

constexpr std::uint64_t kAssignStreamTag = 1;
constexpr std::uint64_t kChangingStreamTag = 2;
constexpr double kBinEps = 1e-9;

std::size_t index_of(UserCategory c) { return static_cast<std::size_t>(c); }

// Splits a CSV line; no quoting needed for our formats.
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

double parse_double(const std::string& s, std::size_t line_no, const char* what) {
  try {
    std::size_t consumed = 0;
    double v = std::stod(s, &consumed);
    if (consumed != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad " + what + " \"" + s +
                             "\"");
  }
}

// Fisher-Yates; a k-step prefix is a uniform without-replacement sample.
void partial_shuffle(std::vector<NodeId>& ids, std::size_t k, RngStream& rng) {
  const std::size_t n = ids.size();
  for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
    std::swap(ids[i], ids[j]);
  }
}

}  // namespace

std::string_view to_string(UserCategory c) {
  switch (c) {
    case UserCategory::Amplifier: return "amplifier";
    case UserCategory::Attenuator: return "attenuator";
    case UserCategory::Copycat: return "copycat";
  }
  return "unknown";
}

std::optional<UserCategory> category_from_string(std::string_view name) {
  if (name == "amplifier") return UserCategory::Amplifier;
  if (name == "attenuator") return UserCategory::Attenuator;
  if (name == "copycat") return UserCategory::Copycat;
  return std::nullopt;
}

std::array<std::size_t, kCategoryCount> CategoryProfile::counts() const {
  std::array<std::size_t, kCategoryCount> result{};
  for (UserCategory c : category) ++result[index_of(c)];
  return result;
}

std::size_t CategoryProfile::changing_count() const {
  return static_cast<std::size_t>(std::count(changing.begin(), changing.end(), std::uint8_t{1}));
}

CategoryProfile assign_categories(const DirectedGraph& g, const CategoryFractions& fractions,
                                  double changing_fraction, std::uint64_t seed) {
  const double sum = fractions.amplifier + fractions.attenuator + fractions.copycat;
  if (fractions.amplifier < 0 || fractions.attenuator < 0 || fractions.copycat < 0 ||
      std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("category fractions must be non-negative and sum to 1");
  if (!(changing_fraction >= 0.0 && changing_fraction <= 1.0))
    throw std::invalid_argument("changing fraction must lie in [0, 1]");

  const std::size_t n = g.node_count();
  std::size_t n_amp = static_cast<std::size_t>(std::llround(fractions.amplifier * n));
  std::size_t n_atn = static_cast<std::size_t>(std::llround(fractions.attenuator * n));
  n_amp = std::min(n_amp, n);
  n_atn = std::min(n_atn, n - n_amp);

  CategoryProfile profile;
  profile.category.assign(n, UserCategory::Copycat);
  std::fill_n(profile.category.begin(), n_amp, UserCategory::Amplifier);
  std::fill_n(profile.category.begin() + n_amp, n_atn, UserCategory::Attenuator);

  std::vector<NodeId> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<NodeId>(i);
  RngStream cat_rng(derive_key(seed, kAssignStreamTag));
  partial_shuffle(order, n, cat_rng);
  std::vector<UserCategory> shuffled(n);
  for (std::size_t i = 0; i < n; ++i) shuffled[order[i]] = profile.category[i];
  profile.category = std::move(shuffled);

  profile.changing.assign(n, 0);
  const std::size_t n_changing =
      std::min<std::size_t>(static_cast<std::size_t>(std::llround(changing_fraction * n)), n);
  std::vector<NodeId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<NodeId>(i);
  RngStream flag_rng(derive_key(seed, kChangingStreamTag));
  partial_shuffle(ids, n_changing, flag_rng);
  for (std::size_t i = 0; i < n_changing; ++i) profile.changing[ids[i]] = 1;
  return profile;
}

TransitionMatrix::TransitionMatrix() = default;

TransitionMatrix TransitionMatrix::defaults() {
  TransitionMatrix m;
  m.set(UserCategory::Copycat, UserCategory::Attenuator, 0.1737);
  m.set(UserCategory::Copycat, UserCategory::Amplifier, 0.2826);
  m.set(UserCategory::Attenuator, UserCategory::Copycat, 0.1874);
  m.set(UserCategory::Attenuator, UserCategory::Amplifier, 0.0347);
  m.set(UserCategory::Amplifier, UserCategory::Copycat, 0.2903);
  m.set(UserCategory::Amplifier, UserCategory::Attenuator, 0.0314);
  return m;
}

void TransitionMatrix::set(UserCategory from, UserCategory to, double p) {
  if (from == to) throw std::invalid_argument("stay probability is implied, not set");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability must lie in [0, 1]");
  off_diagonal_[index_of(from)][index_of(to)] = p;
  validate_row(from);
}

void TransitionMatrix::validate_row(UserCategory from) const {
  double row = 0.0;
  for (UserCategory to : kAllCategories)
    if (to != from) row += off_diagonal_[index_of(from)][index_of(to)];
  if (row > 1.0 + 1e-12)
    throw std::invalid_argument("off-diagonal probabilities of a row exceed 1");
}

double TransitionMatrix::probability(UserCategory from, UserCategory to) const {
  if (from == to) return stay_probability(from);
  return off_diagonal_[index_of(from)][index_of(to)];
}

double TransitionMatrix::stay_probability(UserCategory from) const {
  double row = 0.0;
  for (UserCategory to : kAllCategories)
    if (to != from) row += off_diagonal_[index_of(from)][index_of(to)];
  return 1.0 - row;
}

TransitionMatrix TransitionMatrix::load_csv(std::istream& in) {
  TransitionMatrix m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv(line);
    if (fields.size() == 3 && fields[0] == "from") continue;  // header
    if (fields.size() != 3)
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": expected \"from,to,prob\"");
    auto from = category_from_string(fields[0]);
    auto to = category_from_string(fields[1]);
    if (!from || !to)
      throw std::runtime_error("line " + std::to_string(line_no) + ": unknown category name");
    m.set(*from, *to, parse_double(fields[2], line_no, "probability"));
  }
  return m;
}

void TransitionMatrix::save_csv(std::ostream& out) const {
  out << "from,to,prob\n";
  char buf[64];
  for (UserCategory from : kAllCategories)
    for (UserCategory to : kAllCategories) {
      if (from == to) continue;
      std::snprintf(buf, sizeof buf, "%.17g", probability(from, to));
      out << to_string(from) << ',' << to_string(to) << ',' << buf << '\n';
    }
}

UserCategory step_category(UserCategory current, bool changing, const TransitionMatrix& m,
                           RngStream& rng) {
  const double u = rng.uniform01();  // always one draw, keeps streams aligned
  if (!changing) return current;
  double cumulative = 0.0;
  for (UserCategory to : kAllCategories) {
    if (to == current) continue;
    cumulative += m.probability(current, to);
    if (u < cumulative) return to;
  }
  return current;
}

ShiftDistribution ShiftDistribution::from_bins(
    std::array<std::vector<InputBin>, kCategoryCount> bins) {
  ShiftDistribution d;
  d.bins_ = std::move(bins);
  d.validate_and_index();
  return d;
}

void ShiftDistribution::validate_and_index() {
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    auto& input_bins = bins_[c];
    cumulative_[c].clear();
    if (input_bins.empty()) continue;

    std::sort(input_bins.begin(), input_bins.end(),
              [](const InputBin& a, const InputBin& b) { return a.lo < b.lo; });
    if (std::abs(input_bins.front().lo) > kBinEps ||
        std::abs(input_bins.back().hi - 1.0) > kBinEps)
      throw std::runtime_error("input bins must cover [0, 1]");
    for (std::size_t i = 0; i < input_bins.size(); ++i) {
      if (!(input_bins[i].hi > input_bins[i].lo))
        throw std::runtime_error("input bin must have positive width");
      if (i + 1 < input_bins.size()) {
        const double gap = input_bins[i + 1].lo - input_bins[i].hi;
        if (gap > kBinEps) throw std::runtime_error("gap in input coverage of [0, 1]");
        if (gap < -kBinEps) throw std::runtime_error("overlapping input bins");
      }
    }

    cumulative_[c].resize(input_bins.size());
    for (std::size_t i = 0; i < input_bins.size(); ++i) {
      auto& shifts = input_bins[i].shifts;
      std::sort(shifts.begin(), shifts.end(),
                [](const ShiftBin& a, const ShiftBin& b) { return a.lo < b.lo; });
      double mass = 0.0;
      for (std::size_t j = 0; j < shifts.size(); ++j) {
        const ShiftBin& b = shifts[j];
        if (b.density < 0.0) throw std::runtime_error("negative density");
        if (b.hi < b.lo) throw std::runtime_error("shift bin upper edge below lower edge");
        if (b.lo < -1.0 - kBinEps || b.hi > 1.0 + kBinEps)
          throw std::runtime_error("shift bins must lie within [-1, 1]");
        if (j + 1 < shifts.size() && shifts[j + 1].lo < b.hi - kBinEps)
          throw std::runtime_error("overlapping shift bins");
        mass += b.density;
      }
      if (!shifts.empty()) {
        if (mass < 0.99 || mass > 1.01)
          throw std::runtime_error("shift densities of an input bin must sum to 1 (+-1%)");
        for (ShiftBin& b : shifts) b.density /= mass;
      }
      auto& cum = cumulative_[c][i];
      cum.resize(shifts.size());
      double running = 0.0;
      for (std::size_t j = 0; j < shifts.size(); ++j) {
        running += shifts[j].density;
        cum[j] = running;
      }
    }
  }
}

ShiftDistribution ShiftDistribution::synthetic_default(std::size_t input_bins) {
  if (input_bins == 0) throw std::invalid_argument("need at least one input bin");
  std::array<std::vector<InputBin>, kCategoryCount> bins;
  for (std::size_t i = 0; i < input_bins; ++i) {
    const double lo = static_cast<double>(i) / input_bins;
    const double hi = static_cast<double>(i + 1) / input_bins;
    const double mid = (lo + hi) / 2.0;

    const double mu_amp = 0.45 * (1.0 - mid);
    bins[index_of(UserCategory::Amplifier)].push_back(
        {lo, hi, {{std::max(0.0, mu_amp - 0.10), std::min(0.9, mu_amp + 0.10), 1.0}}});

    const double mu_atn = -0.5 * mid;
    bins[index_of(UserCategory::Attenuator)].push_back(
        {lo, hi, {{std::max(-0.7, mu_atn - 0.10), std::min(0.2, mu_atn + 0.10), 1.0}}});

    bins[index_of(UserCategory::Copycat)].push_back({lo, hi, {{-0.05, 0.05, 1.0}}});
  }
  return from_bins(std::move(bins));
}

ShiftDistribution ShiftDistribution::load_csv(std::istream& in) {
  std::array<std::vector<InputBin>, kCategoryCount> bins;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv(line);
    if (!fields.empty() && fields[0] == "category") continue;  // header
    if (fields.size() != 6)
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": expected \"category,input_lo,input_hi,shift_lo,shift_hi,"
                               "density\"");
    auto cat = category_from_string(fields[0]);
    if (!cat)
      throw std::runtime_error("line " + std::to_string(line_no) + ": unknown category \"" +
                               fields[0] + "\"");
    const double input_lo = parse_double(fields[1], line_no, "input_lo");
    const double input_hi = parse_double(fields[2], line_no, "input_hi");
    ShiftBin shift{parse_double(fields[3], line_no, "shift_lo"),
                   parse_double(fields[4], line_no, "shift_hi"),
                   parse_double(fields[5], line_no, "density")};

    auto& cat_bins = bins[index_of(*cat)];
    auto it = std::find_if(cat_bins.begin(), cat_bins.end(), [&](const InputBin& b) {
      return std::abs(b.lo - input_lo) <= kBinEps && std::abs(b.hi - input_hi) <= kBinEps;
    });
    if (it == cat_bins.end()) {
      cat_bins.push_back({input_lo, input_hi, {shift}});
    } else {
      it->shifts.push_back(shift);
    }
  }
  return from_bins(std::move(bins));
}

void ShiftDistribution::save_csv(std::ostream& out) const {
  out << "category,input_lo,input_hi,shift_lo,shift_hi,density\n";
  char buf[256];
  for (UserCategory c : kAllCategories) {
    for (const InputBin& ib : bins_[index_of(c)]) {
      for (const ShiftBin& sb : ib.shifts) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g",
                      to_string(c).data(), ib.lo, ib.hi, sb.lo, sb.hi, sb.density);
        out << buf << '\n';
      }
    }
  }
}

bool ShiftDistribution::has_category(UserCategory c) const {
  return !bins_[index_of(c)].empty();
}

const std::vector<ShiftDistribution::InputBin>& ShiftDistribution::input_bins(
    UserCategory c) const {
  return bins_[index_of(c)];
}

std::size_t ShiftDistribution::locate_input_bin(UserCategory c, double avg_in_tox) const {
  const auto& input_bins = bins_[index_of(c)];
  if (input_bins.empty())
    throw std::runtime_error(std::string("no shift distribution for category ") +
                             std::string(to_string(c)));
  if (!(avg_in_tox >= -kBinEps && avg_in_tox <= 1.0 + kBinEps))
    throw std::invalid_argument("average incoming toxicity must lie in [0, 1]");
  // Bins are contiguous; the last bin is right-closed.
  auto it = std::upper_bound(input_bins.begin(), input_bins.end(), avg_in_tox,
                             [](double x, const InputBin& b) { return x < b.lo; });
  if (it == input_bins.begin()) return 0;
  return static_cast<std::size_t>(std::prev(it) - input_bins.begin());
}

double ShiftDistribution::sample(UserCategory c, double avg_in_tox, RngStream& rng) const {
  const std::size_t bin = locate_input_bin(c, avg_in_tox);
  const auto& cum = cumulative_[index_of(c)][bin];
  const auto& shifts = bins_[index_of(c)][bin].shifts;
  if (cum.empty() || cum.back() <= 0.0)
    throw std::runtime_error("empty shift histogram for the located input bin");
  const double u = rng.uniform01() * cum.back();
  const std::size_t pick = static_cast<std::size_t>(
      std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
  const ShiftBin& b = shifts[std::min(pick, shifts.size() - 1)];
  return rng.uniform(b.lo, b.hi);
}

std::pair<double, double> ShiftDistribution::support(UserCategory c) const {
  const auto& input_bins = bins_[index_of(c)];
  if (input_bins.empty())
    throw std::runtime_error(std::string("no shift distribution for category ") +
                             std::string(to_string(c)));
  double lo = 1.0, hi = -1.0;
  for (const InputBin& ib : input_bins)
    for (const ShiftBin& sb : ib.shifts) {
      lo = std::min(lo, sb.lo);
      hi = std::max(hi, sb.hi);
    }
  return {lo, hi};
}

double ShiftDistribution::expected_shift(UserCategory c, std::size_t input_bin_index) const {
  const auto& input_bins = bins_[index_of(c)];
  if (input_bin_index >= input_bins.size()) throw std::out_of_range("input bin index");
  double mean = 0.0;
  for (const ShiftBin& sb : input_bins[input_bin_index].shifts)
    mean += sb.density * (sb.lo + sb.hi) / 2.0;
  return mean;
}

}  // namespace toxsim
