#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "releff/data.hpp"
#include "releff/fully_observed.hpp"
#include "releff/nuisance.hpp"
#include "releff/survival.hpp"

namespace releff {

enum class Scale { identity, logit };
std::string to_string(Scale s);
Scale parse_scale(const std::string& s);

// Two-sided standard normal critical value for a confidence level.
double z_quantile(double level);

struct ConfidenceSet {
  double lo = 0.0, hi = 0.0;
  bool includes_one = false;  // the set is [lo, hi] together with {1}
  double level = 0.95;
  Scale scale = Scale::identity;
  std::vector<std::string> flags;

  bool contains(double x) const { return (x >= lo && x <= hi) || (includes_one && x == 1.0); }
  // Smallest interval containing the set.
  ConfidenceSet hull() const;
};

ConfidenceSet wald_ci(double phi, double se, double level, Scale scale = Scale::identity);
ConfidenceSet wald_ci(const RelEffEstimate& est, double level, Scale scale = Scale::identity);

struct SplitTest {
  bool reject = false;
  double statistic = 0.0;
  double pvalue = 1.0;
  double phi_split = 0.0;
  double se = 0.0;
  double level = 0.95;
  std::uint64_t seed = 0;
  std::size_t n1 = 0, n2 = 0;
};

inline constexpr std::size_t kSplitMinN = 40;

// Seeded uniform shuffle then halving; the extra row of an odd n goes to
// the first (numerator) half.
void split_rows(std::size_t n, std::uint64_t seed, std::vector<std::size_t>& half1, std::vector<std::size_t>& half2);

// Wald test of phi = 1 from an adjusted variance on one half and an
// unadjusted variance on the other.
SplitTest split_test(const VarianceBundle& num1, const VarianceBundle& den2, double level);

SplitTest split_test(const OrdinalDataset& data, Estimand est, Kind kind, const NuisanceOptions& opt, double level,
                     std::uint64_t seed, const TransformU* u = nullptr, std::size_t min_n = kSplitMinN);
SplitTest split_test(const ContinuousDataset& data, Kind kind, const NuisanceOptions& opt, double level,
                     std::uint64_t seed, std::size_t min_n = kSplitMinN);
SplitTest split_test(const SurvivalDataset& data, const SurvivalOptions& opt, const TrialCensoringSpec& G,
                     const SurvEstimand& e, double level, std::uint64_t seed, std::size_t min_n = kSplitMinN);

// Wald set plus {1} when the test does not reject.
ConfidenceSet two_step_set(const ConfidenceSet& wald, const SplitTest& test);

double sample_size_reduction(double phi);

}  // namespace releff
