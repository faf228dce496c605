#include <doctest.h>

#include "helpers.hpp"
#include "releff/error.hpp"
#include "releff/fully_observed.hpp"
#include "releff/numeric.hpp"
#include "releff/simulation.hpp"

using namespace releff;
using doctest::Approx;

namespace {

double sd(const std::vector<double>& x) {
  double m = 0.0, v = 0.0;
  for (double a : x) m += a / x.size();
  for (double a : x) v += (a - m) * (a - m) / x.size();
  return std::sqrt(v);
}

double mean(const std::vector<double>& x) {
  double m = 0.0;
  for (double a : x) m += a;
  return m / x.size();
}

NuisanceOptions group_mean() {
  NuisanceOptions o;
  o.strategy = MeanStrategy::group_mean;
  return o;
}

NewtonOptions tight() {
  NewtonOptions o;
  o.grad_tol = 1e-11;
  return o;
}

RelEffEstimate phi_of(const OrdinalDataset& d, Estimand e, Kind k) {
  const VarianceBundle den = unadjusted_variance(d, e);
  if (k == Kind::working_model) return releff::releff(working_model_variance(d, e, fit_proportional_odds(d, tight())), den);
  return releff::releff(fully_adjusted_variance(d, e, group_mean()), den);
}

OrdinalDataset single(std::vector<int> y, int K) {
  OrdinalDataset d;
  d.schema = testing::discrete_schema("g", {"a"});
  d.K = K;
  d.y = std::move(y);
  d.w = Eigen::MatrixXd::Zero(d.y.size(), 1);
  return d;
}

}  // namespace

TEST_SUITE("fully_observed_releff") {
  TEST_CASE("unadjusted variances on small inputs") {
    CHECK(unadjusted_variance(single({1, 2, 3}, 3), Estimand::DIM).sigma2 == Approx(2.0 / 3));
    CHECK(unadjusted_variance(single({1, 2, 3}, 3), Estimand::MW).sigma2 == Approx(2.0 / 27));
    CHECK(unadjusted_variance(single({1, 2}, 2), Estimand::LOR).sigma2 == Approx(4.0));
  }

  TEST_CASE("unadjusted DIM variance on the exact CDC population") {
    const OrdinalDataset pop = cdc_population();
    const Empirical e = empirical_summary(pop);
    CHECK(e.p[0] == Approx(0.1646).epsilon(1e-12));
    CHECK(e.p[1] == Approx(0.3524).epsilon(1e-12));
    CHECK(e.p[2] == Approx(0.4830).epsilon(1e-12));
    CHECK(unadjusted_variance(pop, Estimand::DIM).sigma2 == Approx(0.5462).epsilon(1e-4));
  }

  TEST_CASE("degenerate outcomes are reported") {
    CHECK_THROWS_WITH_AS(unadjusted_variance(single({2, 2, 2}, 3), Estimand::DIM),
                         doctest::Contains("DegenerateOutcome"), Error);
    CHECK_THROWS_WITH_AS(unadjusted_variance(single({1, 1, 2}, 3), Estimand::LOR), doctest::Contains("BoundaryCDF"),
                         Error);
  }

  TEST_CASE("ANOVA bound with group means on 200 random datasets") {
    Stream s(1234);
    for (int rep = 0; rep < 200; ++rep) {
      const int K = testing::draw_int(s, 2, 6);
      const OrdinalDataset d = testing::random_ordinal_discrete(s, 20 + rep, K, testing::draw_int(s, 1, 5));
      for (Estimand e : {Estimand::DIM, Estimand::MW, Estimand::LOR}) {
        const double su = unadjusted_variance(d, e).sigma2;
        const double sa = fully_adjusted_variance(d, e, group_mean()).sigma2;
        // Exact in real arithmetic; allow a few ulps of rounding.
        CHECK(sa <= su * (1.0 + 8 * std::numeric_limits<double>::epsilon()));
      }
    }
  }

  TEST_CASE("outcome determined by the covariate gives zero adjusted variance") {
    OrdinalDataset d;
    d.schema = testing::discrete_schema("g", {"a", "b", "c"});
    d.K = 3;
    d.w.resize(9, 1);
    for (int i = 0; i < 9; ++i) {
      d.w(i, 0) = i % 3;
      d.y.push_back(i % 3 + 1);
    }
    for (Estimand e : {Estimand::DIM, Estimand::MW, Estimand::LOR})
      CHECK(std::abs(fully_adjusted_variance(d, e, group_mean()).sigma2) < 1e-14);
  }

  TEST_CASE("Mann-Whitney plug-in equals the variance of eta-hat") {
    Stream s(55);
    for (int rep = 0; rep < 100; ++rep) {
      const int K = testing::draw_int(s, 2, 8);
      std::vector<int> y;
      const int n = 5 + rep;
      for (int i = 0; i < n; ++i) y.push_back(testing::draw_int(s, 1, K));
      const OrdinalDataset d = single(y, K);
      const Empirical e = empirical_summary(d);
      std::vector<double> eta;
      for (int v : y) eta.push_back(e.eta[v - 1]);
      double p3 = 0.0;
      for (double p : e.p) p3 += p * p * p;
      const double plug = (1.0 - p3) / 12.0;
      CHECK(std::abs(plug - sd(eta) * sd(eta)) < 1e-12);
      if (plug > 0) CHECK(std::abs(unadjusted_variance(d, Estimand::MW).sigma2 - plug) < 1e-12);
    }
  }

  TEST_CASE("influence values are centred") {
    Stream s(77);
    for (int rep = 0; rep < 20; ++rep) {
      const OrdinalDataset d = testing::random_ordinal_discrete(s, 150, 4, 3);
      const WorkingModelFit f = fit_proportional_odds(d);
      for (Estimand e : {Estimand::DIM, Estimand::MW, Estimand::LOR}) {
        for (const VarianceBundle& b :
             {unadjusted_variance(d, e), fully_adjusted_variance(d, e, group_mean()), working_model_variance(d, e, f)}) {
          CHECK(std::abs(mean(b.if_values)) <= 1e-8 * sd(b.if_values) + 1e-15);
        }
      }
      const OrdinalDataset c = testing::random_ordinal_continuous(s, 150, 3);
      NuisanceOptions poly;
      poly.strategy = MeanStrategy::polynomial;
      for (Estimand e : {Estimand::DIM, Estimand::MW, Estimand::LOR}) {
        const VarianceBundle b = fully_adjusted_variance(c, e, poly);
        CHECK(std::abs(mean(b.if_values)) <= 1e-3 * sd(b.if_values));
      }
    }
  }

  TEST_CASE("influence values match a Gateaux derivative of the estimator") {
    Stream s(2024);
    for (int rep = 0; rep < 4; ++rep) {
      const OrdinalDataset base = rep % 2 ? testing::random_ordinal_discrete(s, 40, 3, 3)
                                          : testing::random_ordinal_discrete(s, 40, 4, 2);
      const std::size_t n = base.n();
      for (Estimand e : {Estimand::DIM, Estimand::MW, Estimand::LOR}) {
        for (Kind k : {Kind::fully_adjusted, Kind::working_model}) {
          const RelEffEstimate est = phi_of(base, e, k);
          double scale = 0.0;
          for (double v : est.if_values) scale = std::max(scale, std::abs(v));
          for (std::size_t i = 0; i < n; i += 7) {
            const double eps = 1e-5;
            auto at = [&](double t) {
              OrdinalDataset d = base;
              d.wt.assign(n, (1.0 - t) / n);
              d.wt[i] += t;
              return phi_of(d, e, k).phi;
            };
            const double fd = (at(eps) - at(-eps)) / (2 * eps);
            INFO(to_string(e), " ", to_string(k), " row ", i);
            CHECK(std::abs(fd - est.if_values[i]) <= 1e-5 * std::max(1.0, scale));
          }
        }
      }
    }
  }

  TEST_CASE("continuous outcome influence values match a Gateaux derivative") {
    Stream s(8);
    ContinuousDataset base;
    base.schema = testing::discrete_schema("g", {"a", "b", "c"});
    const int n = 30;
    base.w.resize(n, 1);
    for (int i = 0; i < n; ++i) {
      base.w(i, 0) = i % 3;
      base.y.push_back(base.w(i, 0) + s.uniform() * 2);
    }
    auto phi_at = [&](const ContinuousDataset& d, Kind k) {
      const VarianceBundle den = unadjusted_variance(d);
      if (k == Kind::working_model) return releff::releff(working_model_variance(d, fit_ols(d)), den);
      return releff::releff(fully_adjusted_variance(d, group_mean()), den);
    };
    for (Kind k : {Kind::fully_adjusted, Kind::working_model}) {
      const RelEffEstimate est = phi_at(base, k);
      for (int i = 0; i < n; i += 5) {
        const double eps = 1e-6;
        auto at = [&](double t) {
          ContinuousDataset d = base;
          d.wt.assign(n, (1.0 - t) / n);
          d.wt[i] += t;
          return phi_at(d, k).phi;
        };
        CHECK(std::abs((at(eps) - at(-eps)) / (2 * eps) - est.if_values[i]) < 1e-5);
      }
    }
  }

  TEST_CASE("saturated working model equals the group-mean adjustment") {
    Stream s(66);
    for (int rep = 0; rep < 20; ++rep) {
      OrdinalDataset d;
      d.schema = testing::discrete_schema("x", {"0", "1"});
      d.K = 2;
      const int n = 60;
      d.w.resize(n, 1);
      for (int i = 0; i < n; ++i) {
        d.w(i, 0) = i % 2;
        d.y.push_back(i < 4 ? 1 + (i / 2) : (s.uniform() < 0.3 + 0.4 * (i % 2) ? 1 : 2));
      }
      const WorkingModelFit f = fit_proportional_odds(d, tight());
      for (Estimand e : {Estimand::DIM, Estimand::MW, Estimand::LOR}) {
        const double sm = working_model_variance(d, e, f).sigma2;
        const double sa = fully_adjusted_variance(d, e, group_mean()).sigma2;
        CHECK(std::abs(sm - sa) <= 1e-10 * sa);
      }
    }
  }

  TEST_CASE("releff assembly") {
    VarianceBundle a, b;
    a.sigma2 = 0.42;
    a.if_values = {0.1, -0.1};
    b.sigma2 = 0.56;
    b.if_values = {0.2, -0.2};
    const RelEffEstimate r = releff::releff(a, b);
    CHECK(r.phi == Approx(0.75));
    const RelEffEstimate same = releff::releff(b, b);
    CHECK(same.phi == 1.0);
    CHECK(same.se == 0.0);
    for (double v : same.if_values) CHECK(v == 0.0);
    VarianceBundle c = b;
    c.if_values.push_back(0.0);
    CHECK_THROWS_WITH_AS(releff::releff(a, c), doctest::Contains("ShapeMismatch"), Error);
  }

  TEST_CASE("independent outcome drives phi towards one") {
    Stream s(5);
    OrdinalDataset d = gen_cdc(20000, s, true);
    for (Estimand e : {Estimand::DIM, Estimand::MW, Estimand::LOR}) {
      CHECK(phi_of(d, e, Kind::working_model).phi == Approx(1.0).epsilon(0.01));
      CHECK(phi_of(d, e, Kind::fully_adjusted).phi == Approx(1.0).epsilon(0.01));
    }
  }

  TEST_CASE("non-converged working model is refused") {
    const OrdinalDataset d = testing::random_ordinal_discrete(*std::make_unique<Stream>(3), 50, 3, 2);
    WorkingModelFit f = fit_proportional_odds(d);
    f.converged = false;
    CHECK_THROWS_WITH_AS(working_model_variance(d, Estimand::DIM, f), doctest::Contains("NonConvergedFit"), Error);
  }

  TEST_CASE("transform scores") {
    TransformU u{{0, 0, 1}};
    CHECK(u.b() == std::vector<double>{0, -1});
    TransformU bad{{0, 2, 1}};
    CHECK_THROWS_AS(bad.validate(3), Error);
    // Binary dichotomy u = I{Y = 3}: variance p3 (1 - p3).
    const OrdinalDataset d = single({1, 2, 3, 3}, 3);
    CHECK(unadjusted_variance(d, Estimand::DIM, &u).sigma2 == Approx(0.25));
  }

  TEST_CASE("parsing") {
    CHECK(parse_estimand("mw") == Estimand::MW);
    CHECK(parse_kind("working") == Kind::working_model);
    CHECK(parse_kind("fully") == Kind::fully_adjusted);
    CHECK_THROWS_AS(parse_estimand("xyz"), Error);
  }

  TEST_CASE("continuous outcome examples") {
    ContinuousDataset d;
    d.schema = testing::continuous_schema();
    d.w.resize(4, 1);
    d.w << 0, 1, 2, 3;
    d.y = {0, 1, 2, 3};
    CHECK(unadjusted_variance(d).sigma2 == Approx(1.25));
    CHECK(std::abs(working_model_variance(d, fit_ols(d)).sigma2) < 1e-20);
  }
}
