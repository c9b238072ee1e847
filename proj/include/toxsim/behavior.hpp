#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "toxsim/graph.hpp"
#include "toxsim/rng.hpp"

namespace toxsim {

enum class UserCategory : std::uint8_t { Amplifier = 0, Attenuator = 1, Copycat = 2 };
inline constexpr std::size_t kCategoryCount = 3;
inline constexpr std::array<UserCategory, kCategoryCount> kAllCategories = {
    UserCategory::Amplifier, UserCategory::Attenuator, UserCategory::Copycat};

std::string_view to_string(UserCategory c);
std::optional<UserCategory> category_from_string(std::string_view name);

struct CategoryFractions {
  double amplifier = 0.053;
  double attenuator = 0.014;
  double copycat = 0.933;
};

// Per-node category plus the flag marking users whose category may change.
struct CategoryProfile {
  std::vector<UserCategory> category;
  std::vector<std::uint8_t> changing;

  std::array<std::size_t, kCategoryCount> counts() const;
  std::size_t changing_count() const;
};

// Random assignment with exact rounded counts per category (remainder goes to
// Copycat) and an exact rounded count of changing users drawn independently.
CategoryProfile assign_categories(const DirectedGraph& g, const CategoryFractions& fractions,
                                  double changing_fraction, std::uint64_t seed);

// Off-diagonal category-change probabilities; the stay probability of each
// row is the complement of its off-diagonal sum.
class TransitionMatrix {
 public:
  TransitionMatrix();

  // Change probabilities observed on Twitter (the simulation defaults).
  static TransitionMatrix defaults();

  // CSV rows "from,to,prob" with lowercase category names.
  static TransitionMatrix load_csv(std::istream& in);
  void save_csv(std::ostream& out) const;

  void set(UserCategory from, UserCategory to, double p);
  double probability(UserCategory from, UserCategory to) const;
  double stay_probability(UserCategory from) const;

 private:
  std::array<std::array<double, kCategoryCount>, kCategoryCount> off_diagonal_{};
  void validate_row(UserCategory from) const;
};

// One transition draw. Non-changing users are fixed points for any draw.
UserCategory step_category(UserCategory current, bool changing, const TransitionMatrix& m,
                           RngStream& rng);

struct ShiftBin {
  double lo = 0.0;
  double hi = 0.0;
  double density = 0.0;  // probability mass of the bin within its input bin
};

// Conditional distribution of shift given the input-toxicity bin, per user
// category. Categories may use different input binnings; each category's
// input bins must tile [0, 1] (last bin right-closed).
class ShiftDistribution {
 public:
  struct InputBin {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<ShiftBin> shifts;
  };

  ShiftDistribution() = default;

  // Validates coverage, overlap, densities; renormalizes each input bin whose
  // mass is within [0.99, 1.01] and rejects anything further from 1.
  static ShiftDistribution from_bins(std::array<std::vector<InputBin>, kCategoryCount> bins);

  // Parametric stand-in used when no empirical histogram file is supplied:
  // per input-bin midpoint I, Amplifier is uniform on 0.45*(1-I) +- 0.10
  // clipped to [0.0, 0.9], Attenuator uniform on -0.5*I +- 0.10 clipped to
  // [-0.7, 0.2], Copycat uniform on [-0.05, 0.05].
  static ShiftDistribution synthetic_default(std::size_t input_bins = 20);

  // CSV rows "category,input_lo,input_hi,shift_lo,shift_hi,density".
  static ShiftDistribution load_csv(std::istream& in);
  void save_csv(std::ostream& out) const;

  // Locates the input bin holding avg_in_tox, picks a shift bin proportionally
  // to density, and draws uniformly within it.
  double sample(UserCategory c, double avg_in_tox, RngStream& rng) const;

  bool has_category(UserCategory c) const;
  const std::vector<InputBin>& input_bins(UserCategory c) const;
  std::size_t locate_input_bin(UserCategory c, double avg_in_tox) const;

  // Support (min shift, max shift) over all of a category's bins.
  std::pair<double, double> support(UserCategory c) const;

  // Closed-form mean shift of one input bin (density-weighted bin midpoints).
  double expected_shift(UserCategory c, std::size_t input_bin_index) const;

 private:
  std::array<std::vector<InputBin>, kCategoryCount> bins_{};
  std::array<std::vector<std::vector<double>>, kCategoryCount> cumulative_{};

  void validate_and_index();
};

}  // namespace toxsim
