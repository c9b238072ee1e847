#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace toxsim {

// Linear-interpolation quantile of ascending-sorted data, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

struct BoxWhiskers {
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double lower = 0.0;  // q1 - factor * iqr
  double upper = 0.0;  // q3 + factor * iqr
};

BoxWhiskers box_whiskers(std::span<const double> sorted, double factor = 1.5);

// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

// P(X >= x) for a chi-square variable with df degrees of freedom.
double chi_square_survival(double x, std::size_t df);

struct KruskalWallisResult {
  double h = 0.0;
  double p_value = 1.0;
  std::size_t df = 0;
};

// Kruskal-Wallis H with mid-rank ties and the standard tie-correction divisor
// 1 - sum(t^3 - t) / (N^3 - N); p from the chi-square survival function with
// k - 1 degrees of freedom. All-identical data yields H = 0, p = 1.
KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

}  // namespace toxsim
