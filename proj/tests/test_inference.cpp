#include <doctest.h>

#include <numeric>
#include <set>

#include "helpers.hpp"
#include "releff/error.hpp"
#include "releff/inference.hpp"
#include "releff/numeric.hpp"
#include "releff/simulation.hpp"

using namespace releff;
using doctest::Approx;

namespace {

NuisanceOptions group_mean() {
  NuisanceOptions o;
  o.strategy = MeanStrategy::group_mean;
  return o;
}

}  // namespace

TEST_SUITE("inference") {
  TEST_CASE("normal quantile") {
    CHECK(z_quantile(0.95) == Approx(1.959964).epsilon(1e-6));
    CHECK(z_quantile(0.90) == Approx(1.644854).epsilon(1e-6));
    CHECK_THROWS_AS(z_quantile(1.0), Error);
  }

  TEST_CASE("Wald intervals") {
    const ConfidenceSet a = wald_ci(0.84, 0.021, 0.95);
    CHECK(a.lo == Approx(0.7988).epsilon(1e-4));
    CHECK(a.hi == Approx(0.8812).epsilon(1e-4));
    const ConfidenceSet b = wald_ci(0.5, 0.05, 0.95, Scale::logit);
    CHECK(b.lo == Approx(0.4032).epsilon(1e-4));
    CHECK(b.hi == Approx(0.5968).epsilon(1e-4));
    const ConfidenceSet c = wald_ci(0.7, 0.0, 0.95, Scale::logit);
    CHECK(c.lo == 0.7);
    CHECK(c.hi == 0.7);
    CHECK(c.flags == std::vector<std::string>{"DegenerateSE"});
    CHECK_THROWS_WITH_AS(wald_ci(1.2, 0.1, 0.95, Scale::logit), doctest::Contains("LogitRangeViolation"), Error);
  }

  TEST_CASE("intervals contain the estimate and logit intervals stay in (0,1)") {
    Stream s(1);
    for (int rep = 0; rep < 500; ++rep) {
      const double phi = 0.001 + 0.998 * s.uniform(), se = 2.0 * s.uniform();
      const double level = 0.5 + 0.49 * s.uniform();
      const ConfidenceSet id = wald_ci(phi, se, level);
      CHECK(id.lo <= phi);
      CHECK(id.hi >= phi);
      const ConfidenceSet lg = wald_ci(phi, se, level, Scale::logit);
      CHECK(lg.lo <= phi);
      CHECK(lg.hi >= phi);
      CHECK(lg.lo >= 0.0);
      CHECK(lg.hi <= 1.0);
    }
  }

  TEST_CASE("two-step set") {
    ConfidenceSet w;
    w.lo = 0.70;
    w.hi = 0.90;
    SplitTest t;
    t.reject = true;
    const ConfidenceSet r = two_step_set(w, t);
    CHECK(!r.includes_one);
    CHECK(r.lo == 0.70);
    CHECK(r.hi == 0.90);
    CHECK(!r.contains(1.0));
    t.reject = false;
    const ConfidenceSet k = two_step_set(w, t);
    CHECK(k.includes_one);
    CHECK(k.contains(1.0));
    CHECK(!k.contains(0.95));
    for (double x : {0.7, 0.8, 0.9}) CHECK(k.contains(x));
    const ConfidenceSet h = k.hull();
    CHECK(h.lo == 0.70);
    CHECK(h.hi == 1.0);
    CHECK(h.contains(0.95));
    CHECK(h.flags.back() == "convex_hull");
  }

  TEST_CASE("split rows form a seeded partition") {
    for (std::size_t n : {40, 41, 1001}) {
      std::vector<std::size_t> a1, a2, b1, b2, c1, c2;
      split_rows(n, 17, a1, a2);
      split_rows(n, 17, b1, b2);
      split_rows(n, 18, c1, c2);
      CHECK(a1 == b1);
      CHECK(a2 == b2);
      CHECK(a1 != c1);
      CHECK(a1.size() == (n + 1) / 2);
      CHECK(a1.size() + a2.size() == n);
      std::set<std::size_t> all(a1.begin(), a1.end());
      all.insert(a2.begin(), a2.end());
      CHECK(all.size() == n);
    }
  }

  TEST_CASE("split-test statistic from bundles") {
    VarianceBundle num, den;
    num.sigma2 = 0.4;
    num.if_values = {0.1, -0.3, 0.2};
    den.sigma2 = 0.5;
    den.if_values = {0.5, -0.5};
    const SplitTest t = split_test(num, den, 0.95);
    const double v = ((0.01 + 0.09 + 0.04) / 3 / 3 + 0.64 * 0.25 / 2) / 0.25;
    CHECK(t.phi_split == Approx(0.8));
    CHECK(t.se == Approx(std::sqrt(v)).epsilon(1e-13));
    CHECK(t.statistic == Approx(-0.2 / std::sqrt(v)).epsilon(1e-13));
    CHECK(t.pvalue == Approx(std::erfc(0.2 / std::sqrt(v) / std::sqrt(2.0))).epsilon(1e-13));
    CHECK(t.reject == (t.pvalue < 0.05));
  }

  TEST_CASE("split-test statistic is invariant to row order within halves") {
    Stream s(2);
    const OrdinalDataset d = gen_cdc(300, s);
    std::vector<std::size_t> h1, h2;
    split_rows(d.n(), 5, h1, h2);
    const OrdinalDataset d1 = subset(d, h1), d2 = subset(d, h2);
    std::vector<std::size_t> p1(h1.size()), p2(h2.size());
    std::iota(p1.rbegin(), p1.rend(), 0);
    std::iota(p2.begin(), p2.end(), 0);
    std::rotate(p2.begin(), p2.begin() + 17, p2.end());
    for (Estimand e : {Estimand::DIM, Estimand::MW, Estimand::LOR}) {
      const SplitTest a = split_test(fully_adjusted_variance(d1, e, group_mean()), unadjusted_variance(d2, e), 0.95);
      const SplitTest b = split_test(fully_adjusted_variance(subset(d1, p1), e, group_mean()),
                                     unadjusted_variance(subset(d2, p2), e), 0.95);
      CHECK(a.statistic == Approx(b.statistic).epsilon(1e-12));
    }
  }

  TEST_CASE("split test on datasets is deterministic and guards small n") {
    Stream s(3);
    const OrdinalDataset d = gen_cdc(500, s);
    const SplitTest a = split_test(d, Estimand::DIM, Kind::working_model, group_mean(), 0.95, 42);
    const SplitTest b = split_test(d, Estimand::DIM, Kind::working_model, group_mean(), 0.95, 42);
    CHECK(a.statistic == b.statistic);
    CHECK(a.reject == b.reject);
    CHECK(a.seed == 42);
    CHECK(a.n1 == 250);
    const OrdinalDataset small = subset(d, {0, 1, 2, 3, 4});
    CHECK_THROWS_WITH_AS(split_test(small, Estimand::DIM, Kind::fully_adjusted, group_mean(), 0.95, 1),
                         doctest::Contains("TooFewObservations"), Error);
  }

  TEST_CASE("split test has power against the prognostic CDC covariate") {
    // Population power at n = 1000 from the split-test variance: MW 0.999,
    // DIM 0.819 (se 0.057 against a gap of 0.163).
    int mw = 0, dim = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
      Stream s(4, {static_cast<std::uint64_t>(rep)});
      const OrdinalDataset d = gen_cdc(1000, s);
      mw += split_test(d, Estimand::MW, Kind::fully_adjusted, group_mean(), 0.95, rep).reject;
      dim += split_test(d, Estimand::DIM, Kind::fully_adjusted, group_mean(), 0.95, rep).reject;
    }
    CHECK(mw >= 0.95 * reps);
    // Four binomial standard deviations around the derived power.
    CHECK(std::abs(dim / double(reps) - 0.819) <= 4 * std::sqrt(0.819 * 0.181 / reps));
  }

  TEST_CASE("sample-size reduction") {
    CHECK(sample_size_reduction(1.0) == 0.0);
    CHECK(sample_size_reduction(0.84) == Approx(0.16));
    CHECK(sample_size_reduction(1.05) == Approx(-0.05));
    CHECK_THROWS_AS(sample_size_reduction(0.0), Error);
  }

  TEST_CASE("scale parsing") {
    CHECK(parse_scale("logit") == Scale::logit);
    CHECK(parse_scale("Identity") == Scale::identity);
    CHECK_THROWS_AS(parse_scale("probit"), Error);
  }
}
