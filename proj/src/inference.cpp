#include "releff/inference.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cctype>
#include <cmath>
#include <numeric>

#include "releff/error.hpp"
#include "releff/numeric.hpp"
#include "releff/rng.hpp"

namespace releff {

namespace {

const char* kModule = "inference";

double wmean_sq(const VarianceBundle& b) {
  std::vector<double> sq(b.if_values.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = b.if_values[i] * b.if_values[i];
  return weighted_mean(sq, b.wt);
}

void check_split_n(std::size_t n, std::size_t min_n) {
  if (n < min_n)
    throw data_error("TooFewObservations", kModule,
                     "split test needs at least " + std::to_string(min_n) + " observations, got " + std::to_string(n));
}

}  // namespace

std::string to_string(Scale s) { return s == Scale::logit ? "logit" : "identity"; }

Scale parse_scale(const std::string& s) {
  std::string t(s);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "identity") return Scale::identity;
  if (t == "logit") return Scale::logit;
  throw config_error("BadScale", kModule, "unknown scale '" + s + "'");
}

double z_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) throw config_error("BadLevel", kModule, "level must lie in (0,1)");
  return boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);
}

ConfidenceSet ConfidenceSet::hull() const {
  ConfidenceSet c = *this;
  if (includes_one) {
    c.lo = std::min(lo, 1.0);
    c.hi = std::max(hi, 1.0);
    c.includes_one = false;
    c.flags.push_back("convex_hull");
  }
  return c;
}

ConfidenceSet wald_ci(double phi, double se, double level, Scale scale) {
  if (!std::isfinite(se) || se < 0.0) throw numerical_error("NonFiniteSE", kModule, "standard error is not finite");
  ConfidenceSet c;
  c.level = level;
  c.scale = scale;
  const double z = z_quantile(level);
  if (se == 0.0) {
    c.lo = c.hi = phi;
    c.flags.push_back("DegenerateSE");
    return c;
  }
  if (scale == Scale::identity) {
    c.lo = phi - z * se;
    c.hi = phi + z * se;
    return c;
  }
  if (!(phi > 0.0 && phi < 1.0))
    throw numerical_error("LogitRangeViolation", kModule, "logit scale needs phi in (0,1), got " + std::to_string(phi));
  const double half = z * se / (phi * (1.0 - phi));
  c.lo = expit(logit(phi) - half);
  c.hi = expit(logit(phi) + half);
  return c;
}

ConfidenceSet wald_ci(const RelEffEstimate& est, double level, Scale scale) {
  return wald_ci(est.phi, est.se, level, scale);
}

void split_rows(std::size_t n, std::uint64_t seed, std::vector<std::size_t>& half1, std::vector<std::size_t>& half2) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Stream s(seed, {0x5b11u});
  // Fisher-Yates with an explicit bounded draw so the permutation does not
  // depend on the standard library's distribution implementation.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(s.uniform() * static_cast<double>(i));
    std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
  }
  const std::size_t n1 = (n + 1) / 2;
  half1.assign(idx.begin(), idx.begin() + n1);
  half2.assign(idx.begin() + n1, idx.end());
  std::sort(half1.begin(), half1.end());
  std::sort(half2.begin(), half2.end());
}

SplitTest split_test(const VarianceBundle& num1, const VarianceBundle& den2, double level) {
  if (!(den2.sigma2 > 0.0)) throw numerical_error("DegenerateOutcome", kModule, "unadjusted variance is zero");
  SplitTest t;
  t.level = level;
  t.n1 = num1.if_values.size();
  t.n2 = den2.if_values.size();
  const double N1 = weight_total(num1.wt, t.n1);
  const double N2 = weight_total(den2.wt, t.n2);
  t.phi_split = num1.sigma2 / den2.sigma2;
  const double s4 = den2.sigma2 * den2.sigma2;
  const double var = (wmean_sq(num1) / N1 + t.phi_split * t.phi_split * wmean_sq(den2) / N2) / s4;
  t.se = std::sqrt(var);
  if (!(t.se > 0.0)) throw numerical_error("DegenerateSE", kModule, "split-test standard error is zero");
  t.statistic = (t.phi_split - 1.0) / t.se;
  t.pvalue = std::erfc(std::abs(t.statistic) / std::sqrt(2.0));
  t.reject = t.pvalue < 1.0 - level;
  return t;
}

SplitTest split_test(const OrdinalDataset& data, Estimand est, Kind kind, const NuisanceOptions& opt, double level,
                     std::uint64_t seed, const TransformU* u, std::size_t min_n) {
  check_split_n(data.n(), min_n);
  std::vector<std::size_t> h1, h2;
  split_rows(data.n(), seed, h1, h2);
  const OrdinalDataset d1 = subset(data, h1), d2 = subset(data, h2);
  VarianceBundle num;
  if (kind == Kind::fully_adjusted) {
    num = fully_adjusted_variance(d1, est, opt, u);
  } else if (kind == Kind::working_model) {
    num = working_model_variance(d1, est, fit_proportional_odds(d1), u);
  } else {
    throw config_error("BadKind", kModule, "split test needs an adjusted kind");
  }
  SplitTest t = split_test(num, unadjusted_variance(d2, est, u), level);
  t.seed = seed;
  return t;
}

SplitTest split_test(const ContinuousDataset& data, Kind kind, const NuisanceOptions& opt, double level,
                     std::uint64_t seed, std::size_t min_n) {
  check_split_n(data.n(), min_n);
  std::vector<std::size_t> h1, h2;
  split_rows(data.n(), seed, h1, h2);
  const ContinuousDataset d1 = subset(data, h1), d2 = subset(data, h2);
  VarianceBundle num;
  if (kind == Kind::fully_adjusted) {
    num = fully_adjusted_variance(d1, opt);
  } else if (kind == Kind::working_model) {
    num = working_model_variance(d1, fit_ols(d1));
  } else {
    throw config_error("BadKind", kModule, "split test needs an adjusted kind");
  }
  SplitTest t = split_test(num, unadjusted_variance(d2), level);
  t.seed = seed;
  return t;
}

SplitTest split_test(const SurvivalDataset& data, const SurvivalOptions& opt, const TrialCensoringSpec& G,
                     const SurvEstimand& e, double level, std::uint64_t seed, std::size_t min_n) {
  check_split_n(data.n(), min_n);
  std::vector<std::size_t> h1, h2;
  split_rows(data.n(), seed, h1, h2);
  const SurvivalDataset d1 = subset(data, h1), d2 = subset(data, h2);
  const SurvivalBundle num = survival_adjusted_bundle(d1, fit_discrete_survival(d1, opt), G, e);
  const SurvivalBundle den = survival_unadjusted_bundle(d2, fit_discrete_survival(d2, opt), G, e);
  SplitTest t = split_test(num.bundle, den.bundle, level);
  t.seed = seed;
  return t;
}

ConfidenceSet two_step_set(const ConfidenceSet& wald, const SplitTest& test) {
  ConfidenceSet c = wald;
  c.includes_one = !test.reject;
  return c;
}

double sample_size_reduction(double phi) {
  if (!(phi > 0.0)) throw config_error("BadPhi", kModule, "phi must be positive");
  return 1.0 - phi;
}

}  // namespace releff
