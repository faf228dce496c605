#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace releff {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Honors expit(-inf) = 0 and expit(+inf) = 1 exactly.
inline double expit(double x) {
  if (x == kInf) return 1.0;
  if (x == -kInf) return 0.0;
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

// Pairwise summation: fixed association order, so results do not depend on
// how the input was produced (serial or threaded).
double pairwise_sum(std::span<const double> x);

// Weighted helpers; an empty weight vector means unit weights.
double weight_total(std::span<const double> wt, std::size_t n);
double weighted_mean(std::span<const double> x, std::span<const double> wt);
// sd(x)/sqrt(N) with divisor N, N = total weight.
double weighted_se(std::span<const double> x, std::span<const double> wt);

inline double wt_at(std::span<const double> wt, std::size_t i) { return wt.empty() ? 1.0 : wt[i]; }

}  // namespace releff
