#include "releff/numeric.hpp"

namespace releff {

double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 16) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t h = x.size() / 2;
  return pairwise_sum(x.subspan(0, h)) + pairwise_sum(x.subspan(h));
}

double weight_total(std::span<const double> wt, std::size_t n) {
  return wt.empty() ? static_cast<double>(n) : pairwise_sum(wt);
}

double weighted_mean(std::span<const double> x, std::span<const double> wt) {
  std::vector<double> t(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) t[i] = wt_at(wt, i) * x[i];
  return pairwise_sum(t) / weight_total(wt, x.size());
}

double weighted_se(std::span<const double> x, std::span<const double> wt) {
  const double n = weight_total(wt, x.size());
  const double m = weighted_mean(x, wt);
  std::vector<double> t(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) t[i] = wt_at(wt, i) * (x[i] - m) * (x[i] - m);
  return std::sqrt(pairwise_sum(t) / n / n);
}

}  // namespace releff
