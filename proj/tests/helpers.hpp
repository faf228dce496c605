#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "releff/data.hpp"
#include "releff/rng.hpp"

namespace testing {

inline std::string write_temp(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / ("releff_test_" + name);
  std::ofstream(p) << text;
  return p.string();
}

inline releff::CovariateSchema discrete_schema(const std::string& name, std::vector<std::string> levels) {
  releff::CovariateSchema s;
  s.columns.push_back({name, releff::CovKind::discrete, std::move(levels)});
  return s;
}

inline releff::CovariateSchema continuous_schema(int d = 1) {
  releff::CovariateSchema s;
  for (int j = 0; j < d; ++j) s.columns.push_back({"w" + std::to_string(j + 1), releff::CovKind::continuous, {}});
  return s;
}

inline int draw_int(releff::Stream& s, int lo, int hi) {
  return lo + static_cast<int>(s.uniform() * (hi - lo + 1));
}

// Ordinal data with one discrete covariate of `levels` cells whose outcome
// law shifts with the cell; every outcome level is forced to appear.
inline releff::OrdinalDataset random_ordinal_discrete(releff::Stream& s, int n, int K, int levels) {
  std::vector<std::string> names;
  for (int l = 0; l < levels; ++l) names.push_back("c" + std::to_string(l));
  releff::OrdinalDataset d;
  d.schema = discrete_schema("g", names);
  d.K = K;
  d.w.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    const int g = draw_int(s, 0, levels - 1);
    d.w(i, 0) = g;
    const double shift = 0.6 * g / std::max(1, levels - 1);
    d.y.push_back(i < K ? i + 1 : std::clamp(1 + static_cast<int>((s.uniform() * 0.7 + shift) * K), 1, K));
  }
  return d;
}

// Ordinal data with continuous covariates from a proportional-odds law.
inline releff::OrdinalDataset random_ordinal_continuous(releff::Stream& s, int n, int K, int d_cov = 1,
                                                        double beta = 1.0) {
  releff::OrdinalDataset d;
  d.schema = continuous_schema(d_cov);
  d.K = K;
  d.w.resize(n, d_cov);
  for (int i = 0; i < n; ++i) {
    double eta = 0.0;
    for (int j = 0; j < d_cov; ++j) {
      d.w(i, j) = 2.0 * s.uniform() - 1.0;
      eta += beta * d.w(i, j) / (j + 1);
    }
    const double u = s.uniform();
    int y = K;
    for (int k = 1; k < K; ++k) {
      const double a = -1.0 + 2.0 * (k - 1) / std::max(1, K - 2);
      if (u < 1.0 / (1.0 + std::exp(-(a - eta)))) {
        y = k;
        break;
      }
    }
    d.y.push_back(i < K ? i + 1 : y);
  }
  return d;
}

}  // namespace testing
