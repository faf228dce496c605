#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "releff/data.hpp"
#include "releff/fully_observed.hpp"
#include "releff/rng.hpp"

namespace releff {

struct BootstrapConfig {
  int B1 = 100;
  int B2 = 0;  // 0 = max(2n, 500)
  int N = 0;   // 0 = max(4n, 2000)
  double pi = 0.5;
  std::uint64_t seed = 0;
  double level = 0.95;
  double min_valid_fraction = 0.95;
  bool progress = false;  // replicate counts to stderr

  // Default B2 and N filled in for a sample of size n.
  BootstrapConfig resolved(std::size_t n) const;
  void validate() const;
};

struct BootstrapResult {
  double phi_tilde = 0.0;
  std::vector<double> replicate_values;
  double se = 0.0;
  double lo = 0.0, hi = 0.0;
  std::vector<int> invalid_inner_counts;  // index 0 is the original sample
  std::vector<std::string> warnings;
  BootstrapConfig config;
};

// Source rows with multiplicities: y may be an ordinal level or a real.
struct WeightedSource {
  CovariateSchema schema;
  int K = 0;  // 0 = continuous outcome
  std::vector<double> y;
  Eigen::MatrixXd w;
  std::vector<double> count;

  double total() const;
};

WeightedSource compress(const OrdinalDataset& data);
WeightedSource compress(const ContinuousDataset& data);

// Resample `size` rows with replacement (multinomial counts over the rows).
WeightedSource resample(const WeightedSource& src, std::size_t size, Stream& stream);

// N rows drawn with replacement from `source` plus iid Bernoulli(pi)
// treatments, returned as one weighted row per (source row, arm).
TrialDataset simulate_trial(const WeightedSource& source, std::size_t N, double pi, Stream& stream);

struct PhiTilde {
  std::vector<double> phi;      // per estimand
  std::vector<int> invalid;     // per estimand
};

// Ratio of centered sums of squares of working-model vs unadjusted estimates
// over B2 simulated trials. Invalid inner replicates are dropped from both
// sums for that estimand.
PhiTilde phi_tilde(const WeightedSource& source, const std::vector<Estimand>& ests, const BootstrapConfig& cfg,
                   std::uint64_t outer_index, const TransformU* u = nullptr);

// Double bootstrap, one result per estimand sharing the simulated trials.
std::vector<BootstrapResult> run_bootstrap(const WeightedSource& data, const std::vector<Estimand>& ests,
                                           const BootstrapConfig& cfg, const TransformU* u = nullptr);
BootstrapResult run_bootstrap(const OrdinalDataset& data, Estimand est, const BootstrapConfig& cfg,
                              const TransformU* u = nullptr);
BootstrapResult run_bootstrap(const ContinuousDataset& data, const BootstrapConfig& cfg);

}  // namespace releff
