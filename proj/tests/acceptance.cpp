// Acceptance run: one PASS/FAIL line per criterion, exit code 1 if any fails.
// Usage: releff_acceptance [criterion numbers...]   (default: all)
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "releff/simulation.hpp"

using namespace releff;

namespace {

struct Check {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

void print_summaries(const SimulationReport& r) {
  std::printf("    %-12s %7s %8s %8s %8s %8s %8s %6s\n", "target", "truth", "mean", "bias", "%rmse", "cover", "width",
              "fail");
  for (const McSummary& s : r.summaries)
    std::printf("    %-12s %7.4f %8.4f %8.4f %8.4f %8.3f %8.4f %6d\n", s.label.c_str(), s.truth, s.mean_estimate, s.bias,
                s.pct_rmse, s.coverage, s.mean_width, s.reps_failed);
}

Check criterion1() {
  Check c;
  const struct {
    Estimand e;
    Kind k;
    double ref;
  } rows[] = {{Estimand::DIM, Kind::fully_adjusted, 0.837}, {Estimand::DIM, Kind::working_model, 0.840},
              {Estimand::MW, Kind::fully_adjusted, 0.842},  {Estimand::MW, Kind::working_model, 0.845},
              {Estimand::LOR, Kind::fully_adjusted, 0.838}, {Estimand::LOR, Kind::working_model, 0.842}};
  for (const auto& r : rows) {
    const double v = true_phi_cdc(r.e, r.k);
    const std::string label = to_string(r.e) + (r.k == Kind::fully_adjusted ? " (F)" : " (W)");
    std::printf("    %-8s %.5f  ref %.3f\n", label.c_str(), v, r.ref);
    c.require(std::abs(v - r.ref) <= 0.001 + 1e-12, label + fmt(" = %.5f", v));
  }
  return c;
}

Check criterion2() {
  // Fine-grid (step 0.02) evaluation of the discrete-grid formulas.
  Check c;
  ExpSurvivalDgp dgp;
  dgp.grid_step = 0.02;
  const struct {
    SurvEstimand e;
    const char* label;
    double ref;
  } rows[] = {{{SurvEstimand::Type::RD, 50}, "RD@1", 0.903},
              {{SurvEstimand::Type::RD, 100}, "RD@2", 0.847},
              {{SurvEstimand::Type::RD, 150}, "RD@3", 0.819},
              {{SurvEstimand::Type::RMST, 150}, "RMST@3", 0.820}};
  for (const auto& r : rows) {
    const double v = true_phi_exp(dgp, r.e);
    std::printf("    %-8s %.5f  ref %.3f\n", r.label, v, r.ref);
    c.require(std::abs(v - r.ref) <= 0.005, std::string(r.label) + fmt(" = %.5f", v));
  }
  return c;
}

Check criterion3() {
  Check c;
  MonteCarloConfig cfg;
  cfg.dgp = DgpKind::cdc;
  for (Estimand e : {Estimand::DIM, Estimand::MW, Estimand::LOR})
    for (Kind k : {Kind::fully_adjusted, Kind::working_model}) cfg.targets.push_back({e, k, {}});
  cfg.n = 1000;
  cfg.reps = 1000;
  cfg.seed = 20240101;
  const double width[] = {0.084, 0.082, 0.084, 0.083, 0.085, 0.081};
  const SimulationReport r = monte_carlo(cfg);
  print_summaries(r);
  for (std::size_t t = 0; t < r.summaries.size(); ++t) {
    const McSummary& s = r.summaries[t];
    c.require(s.reps_failed == 0, s.label + " failed replications");
    c.require(std::abs(s.bias) <= 0.01, s.label + fmt(" bias %.4f", s.bias));
    c.require(s.coverage >= 0.93 && s.coverage <= 0.97, s.label + fmt(" coverage %.3f", s.coverage));
    c.require(std::abs(s.mean_width / width[t] - 1.0) <= 0.20, s.label + fmt(" width %.4f", s.mean_width));
  }
  return c;
}

Check criterion4() {
  Check c;
  MonteCarloConfig cfg;
  cfg.dgp = DgpKind::exp_survival;
  cfg.targets = {{Estimand::DIM, Kind::fully_adjusted, {SurvEstimand::Type::RD, 5}},
                 {Estimand::DIM, Kind::fully_adjusted, {SurvEstimand::Type::RD, 10}},
                 {Estimand::DIM, Kind::fully_adjusted, {SurvEstimand::Type::RD, 15}},
                 {Estimand::DIM, Kind::fully_adjusted, {SurvEstimand::Type::RMST, 15}}};
  cfg.n = 1000;
  cfg.reps = 500;
  cfg.seed = 20240102;
  const SimulationReport r = monte_carlo(cfg);
  print_summaries(r);
  for (const McSummary& s : r.summaries) {
    c.require(s.reps_failed == 0, s.label + " failed replications");
    c.require(std::abs(s.bias) <= 0.01, s.label + fmt(" bias %.4f", s.bias));
    c.require(s.coverage >= 0.92 && s.coverage <= 0.97, s.label + fmt(" coverage %.3f", s.coverage));
  }
  return c;
}

Check criterion5() {
  Check c;
  MonteCarloConfig cfg;
  cfg.dgp = DgpKind::cdc;
  cfg.method = McMethod::bootstrap;
  cfg.targets = {{Estimand::DIM, Kind::working_model, {}},
                 {Estimand::MW, Kind::working_model, {}},
                 {Estimand::LOR, Kind::working_model, {}}};
  cfg.n = 1000;
  cfg.reps = 100;
  cfg.seed = 20240103;
  cfg.bootstrap.B1 = 100;
  cfg.bootstrap.B2 = 500;
  cfg.bootstrap.N = 4000;
  const double width[] = {0.154, 0.160, 0.147};
  const SimulationReport r = monte_carlo(cfg);
  print_summaries(r);
  for (std::size_t t = 0; t < r.summaries.size(); ++t) {
    const McSummary& s = r.summaries[t];
    c.require(s.reps_failed == 0, s.label + " failed replications");
    c.require(s.coverage >= 0.88 && s.coverage <= 0.98, s.label + fmt(" coverage %.3f", s.coverage));
    c.require(std::abs(s.mean_width / width[t] - 1.0) <= 0.30, s.label + fmt(" width %.4f", s.mean_width));
  }
  return c;
}

Check criterion6() {
  // The deterministic property cases of the unit suites, run in-process.
  const char* cases[] = {
      "ANOVA bound with group means on 200 random datasets",
      "Mann-Whitney plug-in equals the variance of eta-hat",
      "survivor variance telescopes to S(1 - S) without censoring",
      "fast RMST summand matches the naive triple sum",
      "fast and naive RMST agree on fitted data",
      "K=2 proportional odds equals an IRLS logistic oracle",
      "analytic gradient and Hessian match central differences",
      "influence values are centred",
      "all-one-level outcome gives an infinite threshold",
      "empty middle level and separated top level",
      "degenerate arm levels stay finite",
      "bootstrap is deterministic across runs and thread counts",
      "Monte Carlo output is identical across runs and thread counts",
      "bootstrap Monte Carlo is deterministic",
  };
  std::string filter;
  for (const char* n : cases) filter += (filter.empty() ? "" : ",") + std::string(n);
  doctest::Context ctx;
  ctx.setOption("test-case", filter.c_str());
  ctx.setOption("minimal", true);
  const int rc = ctx.run();
  Check c;
  c.require(rc == 0, "property cases failed");
  std::printf("    %zu property cases, doctest rc %d\n", std::size(cases), rc);
  return c;
}

Check criterion7() {
  Check c;
  MonteCarloConfig cfg;
  cfg.dgp = DgpKind::cdc_null;
  cfg.targets = {{Estimand::DIM, Kind::fully_adjusted, {}}};
  cfg.n = 1000;
  cfg.reps = 500;
  cfg.seed = 20240104;
  cfg.two_step = true;
  const SimulationReport r = monte_carlo(cfg);
  print_summaries(r);
  const McSummary& s = r.summaries[0];
  std::printf("    two-step coverage %.3f, split-test rejection rate %.3f\n", s.two_step_coverage, s.rejection_rate);
  c.require(s.reps_failed == 0, "failed replications");
  c.require(s.two_step_coverage >= 0.93, fmt("two-step coverage %.3f", s.two_step_coverage));
  c.require(s.rejection_rate >= 0.03 && s.rejection_rate <= 0.07, fmt("type-I rate %.3f", s.rejection_rate));
  return c;
}

Check criterion8() {
  Check c;
  // T independent of W; trial censoring hazard 0.02 + W.
  MonteCarloConfig harm;
  harm.dgp = DgpKind::exp_survival;
  harm.exp.base = 0.55;
  harm.exp.slope = 0.0;
  harm.trial_censoring.type = TrialCensoringSpec::Type::function;
  harm.trial_censoring.fn = [](int, double t, const Eigen::Ref<const Eigen::RowVectorXd>& w) {
    return std::exp(-(0.02 + w[0]) * t);
  };
  harm.targets = {{Estimand::DIM, Kind::fully_adjusted, {SurvEstimand::Type::RD, 10}}};
  harm.n = 2000;
  harm.reps = 50;
  harm.seed = 20240105;
  const SimulationReport a = monte_carlo(harm);
  print_summaries(a);

  // Prognostic W with constant trial censoring.
  MonteCarloConfig help = harm;
  help.exp = ExpSurvivalDgp{};
  help.trial_censoring = TrialCensoringSpec::exponential(0.1);
  help.seed = 20240106;
  const SimulationReport b = monte_carlo(help);
  print_summaries(b);

  c.require(a.summaries[0].reps_failed == 0 && b.summaries[0].reps_failed == 0, "failed replications");
  c.require(a.summaries[0].mean_estimate > 1.0, fmt("w-varying G mean phi %.4f", a.summaries[0].mean_estimate));
  c.require(b.summaries[0].mean_estimate < 1.0, fmt("constant G mean phi %.4f", b.summaries[0].mean_estimate));
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  Check (*const criteria[])() = {criterion1, criterion2, criterion3, criterion4,
                                 criterion5, criterion6, criterion7, criterion8};
  const char* names[] = {"population truths, ordinal",
                         "population truths, survival",
                         "analytic Monte Carlo, ordinal",
                         "analytic Monte Carlo, survival",
                         "double bootstrap Monte Carlo",
                         "property suites",
                         "two-step confidence set under the null",
                         "efficiency dichotomy"};
  bool all = true;
  for (int i = 0; i < 8; ++i) {
    if (!only.empty() && !only.count(i + 1)) continue;
    std::printf("criterion %d: %s\n", i + 1, names[i]);
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      c = criteria[i]();
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d (%s) [%.1f s]%s%s\n", c.pass ? "PASS" : "FAIL", i + 1, names[i], secs,
                c.detail.empty() ? "" : ": ", c.detail.c_str());
    std::fflush(stdout);
    all = all && c.pass;
  }
  return all ? 0 : 1;
}
