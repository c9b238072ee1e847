#include "toxsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace toxsim {

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile must lie in [0, 1]");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const std::size_t i = static_cast<std::size_t>(h);
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

BoxWhiskers box_whiskers(std::span<const double> sorted, double factor) {
  BoxWhiskers b;
  b.q1 = quantile_sorted(sorted, 0.25);
  b.q3 = quantile_sorted(sorted, 0.75);
  b.iqr = b.q3 - b.q1;
  b.lower = b.q1 - factor * b.iqr;
  b.upper = b.q3 + factor * b.iqr;
  return b;
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("gamma_q requires a > 0, x >= 0");
  if (x == 0.0) return 1.0;

  const double log_prefactor = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    // Series for P(a, x); Q = 1 - P.
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 1000; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return 1.0 - sum * std::exp(log_prefactor);
  }
  // Lentz continued fraction for Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(log_prefactor) * h;
}

double chi_square_survival(double x, std::size_t df) {
  if (df == 0) throw std::invalid_argument("degrees of freedom must be positive");
  return gamma_q(static_cast<double>(df) / 2.0, x / 2.0);
}

KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  const std::size_t k = groups.size();
  if (k < 2) throw std::invalid_argument("need at least two groups");
  std::size_t n_total = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("groups must be non-empty");
    n_total += g.size();
  }
  if (n_total < 3) throw std::invalid_argument("need at least three observations");

  std::vector<std::pair<double, std::size_t>> pooled;
  pooled.reserve(n_total);
  for (std::size_t gi = 0; gi < k; ++gi)
    for (double v : groups[gi]) pooled.emplace_back(v, gi);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<double> rank_sums(k, 0.0);
  double tie_sum = 0.0;
  std::size_t i = 0;
  while (i < n_total) {
    std::size_t j = i;
    while (j < n_total && pooled[j].first == pooled[i].first) ++j;
    const double tie_count = static_cast<double>(j - i);
    const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) rank_sums[pooled[t].second] += mid_rank;
    if (j - i > 1) tie_sum += tie_count * tie_count * tie_count - tie_count;
    i = j;
  }

  const double n = static_cast<double>(n_total);
  const double correction = 1.0 - tie_sum / (n * n * n - n);
  KruskalWallisResult result;
  result.df = k - 1;
  if (correction <= 0.0) return result;  // all values identical

  double sum_term = 0.0;
  for (std::size_t gi = 0; gi < k; ++gi)
    sum_term += rank_sums[gi] * rank_sums[gi] / static_cast<double>(groups[gi].size());
  double h = (12.0 / (n * (n + 1.0))) * sum_term - 3.0 * (n + 1.0);
  h /= correction;
  if (h < 0.0 && h > -1e-9) h = 0.0;  // fp residue on constant-ish data

  result.h = h;
  result.p_value = chi_square_survival(h, result.df);
  return result;
}

}  // namespace toxsim
