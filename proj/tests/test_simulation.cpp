#include <doctest.h>

#include "helpers.hpp"
#include "releff/error.hpp"
#include "releff/parallel.hpp"
#include "releff/simulation.hpp"

using namespace releff;
using doctest::Approx;

namespace {

MonteCarloConfig small_cdc(std::uint64_t seed, int reps) {
  MonteCarloConfig c;
  c.dgp = DgpKind::cdc;
  c.targets = {{Estimand::DIM, Kind::fully_adjusted, {}}, {Estimand::MW, Kind::working_model, {}}};
  c.n = 300;
  c.reps = reps;
  c.seed = seed;
  c.two_step = true;
  return c;
}

}  // namespace

TEST_SUITE("simulation") {
  TEST_CASE("CDC marginal outcome law") {
    const auto p = CdcDgp::marginal();
    CHECK(p[0] == Approx(0.1646).epsilon(1e-12));
    CHECK(p[1] == Approx(0.3524).epsilon(1e-12));
    CHECK(p[2] == Approx(0.4830).epsilon(1e-12));
    CHECK(p[0] + p[1] + p[2] == Approx(1.0).epsilon(1e-15));
    double s = 0.0;
    for (double a : CdcDgp::p_age) s += a;
    CHECK(s == Approx(1.0).epsilon(1e-15));
    for (const auto& row : CdcDgp::p_y) CHECK(row[0] + row[1] + row[2] == Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("CDC draws match the table") {
    Stream s(1);
    const std::size_t n = 1000000;
    const OrdinalDataset d = gen_cdc(n, s);
    std::vector<double> age(7, 0.0), cell(21, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const int g = static_cast<int>(d.w(i, 0)) - 1;
      age[g] += 1.0 / n;
      cell[3 * g + d.y[i] - 1] += 1.0 / n;
    }
    for (int g = 0; g < 7; ++g) {
      CHECK(std::abs(age[g] - CdcDgp::p_age[g]) < 0.002);
      for (int k = 0; k < 3; ++k) CHECK(std::abs(cell[3 * g + k] - CdcDgp::p_age[g] * CdcDgp::p_y[g][k]) < 0.002);
    }
    Stream a(2), b(2);
    CHECK(gen_cdc(100, a).y == gen_cdc(100, b).y);
  }

  TEST_CASE("DIM fully adjusted truth is E var(Y | age) / var(Y)") {
    double ey = 0.0, ey2 = 0.0, within = 0.0;
    for (int g = 0; g < 7; ++g) {
      double m = 0.0, m2 = 0.0;
      for (int k = 0; k < 3; ++k) {
        m += (k + 1) * CdcDgp::p_y[g][k];
        m2 += (k + 1) * (k + 1) * CdcDgp::p_y[g][k];
      }
      within += CdcDgp::p_age[g] * (m2 - m * m);
      ey += CdcDgp::p_age[g] * m;
      ey2 += CdcDgp::p_age[g] * m2;
    }
    CHECK(std::abs(true_phi_cdc(Estimand::DIM, Kind::fully_adjusted) - within / (ey2 - ey * ey)) < 1e-12);
  }

  TEST_CASE("population truths") {
    CHECK(true_phi_cdc(Estimand::DIM, Kind::fully_adjusted) == Approx(0.837).epsilon(0.001 / 0.837));
    CHECK(true_phi_cdc(Estimand::MW, Kind::working_model) == Approx(0.845).epsilon(0.001 / 0.845));
    for (Estimand e : {Estimand::DIM, Estimand::MW, Estimand::LOR})
      for (Kind k : {Kind::fully_adjusted, Kind::working_model}) CHECK(true_phi_cdc(e, k, true) == Approx(1.0));
    ExpSurvivalDgp d;
    CHECK(true_phi_exp(d, {SurvEstimand::Type::RD, 10}) == Approx(0.847).epsilon(0.002 / 0.847));
  }

  TEST_CASE("exponential survival draws") {
    // Event by t = 3: int_0^1 lambda/(lambda + c) (1 - exp(-(lambda + c) 3)) dw.
    ExpSurvivalDgp dgp;
    double oracle = 0.0;
    const int m = 20000;
    for (int j = 0; j < m; ++j) {
      const double w = (j + 0.5) / m, l = dgp.rate(w), r = l + dgp.cens_rate;
      oracle += l / r * (1.0 - std::exp(-r * 3.0)) / m;
    }
    Stream s(3);
    const std::size_t n = 1000000;
    const SurvivalDataset d = gen_exp_survival(n, s, dgp);
    double frac = 0.0;
    for (std::size_t i = 0; i < n; ++i) frac += d.delta[i] / double(n);
    CHECK(std::abs(frac - oracle) < 0.003);
    CHECK(d.K() == 15);
    CHECK(d.grid.back() == Approx(3.0));

    ExpSurvivalDgp nocens = dgp;
    nocens.cens_rate = 0.0;
    nocens.horizon = 200.0;
    nocens.grid_step = 1.0;
    Stream t(4);
    const SurvivalDataset e = gen_exp_survival(2000, t, nocens);
    for (int v : e.delta) CHECK(v == 1);
    Stream a(5), b(5);
    CHECK(gen_exp_survival(50, a, dgp).y == gen_exp_survival(50, b, dgp).y);
  }

  TEST_CASE("Monte Carlo summaries are consistent") {
    const SimulationReport r = monte_carlo(small_cdc(6, 40));
    REQUIRE(r.summaries.size() == 2);
    for (const McSummary& s : r.summaries) {
      CHECK(s.reps_ok + s.reps_failed == 40);
      CHECK(s.mse >= s.bias * s.bias);
      CHECK(s.pct_rmse == Approx(std::sqrt(s.mse) / s.truth));
      CHECK(s.coverage >= 0.0);
      CHECK(s.coverage <= 1.0);
      CHECK(s.two_step_coverage >= s.coverage);
      CHECK(s.mean_estimate == Approx(s.truth + s.bias));
    }
    CHECK(r.records.size() == 80);
  }

  TEST_CASE("one replication is flagged") {
    const SimulationReport r = monte_carlo(small_cdc(7, 1));
    REQUIRE(!r.flags.empty());
    CHECK(r.flags[0].rfind("low_reps", 0) == 0);
    for (const McSummary& s : r.summaries) CHECK((s.coverage == 0.0 || s.coverage == 1.0));
  }

  TEST_CASE("Monte Carlo output is identical across runs and thread counts") {
    set_threads(1);
    const std::string a = records_csv(monte_carlo(small_cdc(8, 12)));
    set_threads(3);
    const std::string b = records_csv(monte_carlo(small_cdc(8, 12)));
    MonteCarloConfig sc;
    sc.dgp = DgpKind::exp_survival;
    sc.targets = {{Estimand::DIM, Kind::fully_adjusted, {SurvEstimand::Type::RD, 5}},
                  {Estimand::DIM, Kind::fully_adjusted, {SurvEstimand::Type::RMST, 15}}};
    sc.n = 300;
    sc.reps = 6;
    sc.seed = 9;
    const std::string c = records_csv(monte_carlo(sc));
    set_threads(1);
    const std::string d = records_csv(monte_carlo(sc));
    set_threads(0);
    CHECK(a == b);
    CHECK(c == d);
    CHECK(a != records_csv(monte_carlo(small_cdc(9, 12))));
  }

  TEST_CASE("bootstrap Monte Carlo is deterministic") {
    MonteCarloConfig c = small_cdc(10, 2);
    c.method = McMethod::bootstrap;
    c.two_step = false;
    c.targets = {{Estimand::DIM, Kind::working_model, {}}};
    c.bootstrap.B1 = 4;
    c.bootstrap.B2 = 20;
    c.bootstrap.N = 400;
    set_threads(2);
    const std::string a = records_csv(monte_carlo(c));
    set_threads(1);
    const std::string b = records_csv(monte_carlo(c));
    set_threads(0);
    CHECK(a == b);
  }

  TEST_CASE("parsing") {
    CHECK(parse_dgp("cdc") == DgpKind::cdc);
    CHECK(parse_dgp("exp_survival") == DgpKind::exp_survival);
    CHECK(parse_method("bootstrap") == McMethod::bootstrap);
    CHECK_THROWS_AS(parse_dgp("other"), Error);
  }
}
