#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "releff/bootstrap.hpp"
#include "releff/data.hpp"
#include "releff/fully_observed.hpp"
#include "releff/inference.hpp"
#include "releff/nuisance.hpp"
#include "releff/rng.hpp"
#include "releff/survival.hpp"

namespace releff {

// Hospitalized Covid-19 patients by age group: P(age) and P(outcome | age)
// for outcomes 1 = death, 2 = ICU and survived, 3 = no ICU and survived.
struct CdcDgp {
  static constexpr int kGroups = 7;
  static constexpr std::array<double, kGroups> p_age = {0.01, 0.09, 0.12, 0.13, 0.18, 0.22, 0.25};
  static constexpr std::array<std::array<double, 3>, kGroups> p_y = {{{0.00, 0.00, 1.00},
                                                                       {0.01, 0.18, 0.81},
                                                                       {0.03, 0.32, 0.65},
                                                                       {0.08, 0.31, 0.61},
                                                                       {0.11, 0.37, 0.52},
                                                                       {0.17, 0.47, 0.36},
                                                                       {0.37, 0.35, 0.28}}};
  static std::array<double, 3> marginal();
  // Age enters the models as its group code 1..7.
  static CovariateSchema schema();
};

// Draws (age, outcome) pairs; with `null_outcome` the outcome comes from the
// marginal law independently of age.
OrdinalDataset gen_cdc(std::size_t n, Stream& stream, bool null_outcome = false);

// Exact population as a weighted dataset: one row per (age, outcome) cell
// with positive probability.
OrdinalDataset cdc_population(bool null_outcome = false);

// W ~ Uniform(0,1), T | W ~ Exp(base + slope W), C ~ Exp(cens_rate).
struct ExpSurvivalDgp {
  double base = 0.1;
  double slope = 0.9;
  double cens_rate = 0.1;
  double grid_step = 0.2;
  double horizon = 3.0;

  double rate(double w) const { return base + slope * w; }
  static CovariateSchema schema();
};

SurvivalDataset gen_exp_survival(std::size_t n, Stream& stream, const ExpSurvivalDgp& dgp = {});

double true_phi_cdc(Estimand est, Kind kind, bool null_outcome = false);

// Survival truth on the dgp grid; `G` (default: the dgp censoring rate as
// exp(-rate t)) is the trial censoring survivor at (t, w).
double true_phi_exp(const ExpSurvivalDgp& dgp, const SurvEstimand& e,
                    const std::function<double(double t, double w)>& G = {});

enum class DgpKind { cdc, cdc_null, exp_survival };
std::string to_string(DgpKind d);
DgpKind parse_dgp(const std::string& s);

enum class McMethod { analytic, bootstrap };
std::string to_string(McMethod m);
McMethod parse_method(const std::string& s);

struct McTarget {
  Estimand estimand = Estimand::DIM;
  Kind kind = Kind::fully_adjusted;
  SurvEstimand surv;  // survival dgp only
  std::string label(bool survival) const;
};

struct MonteCarloConfig {
  DgpKind dgp = DgpKind::cdc;
  ExpSurvivalDgp exp;
  std::vector<McTarget> targets;
  McMethod method = McMethod::analytic;
  std::size_t n = 1000;
  int reps = 1000;
  std::uint64_t seed = 0;
  double level = 0.95;
  Scale scale = Scale::logit;
  bool two_step = false;
  NuisanceOptions nuisance;
  std::optional<SurvivalOptions> survival;  // unset: default for the schema
  TrialCensoringSpec trial_censoring = TrialCensoringSpec::exponential(0.1);  // survival dgp
  BootstrapConfig bootstrap;                 // method = bootstrap; seed derived per replication
};

struct McRecord {
  int rep = 0;
  int target = 0;
  bool ok = false;
  double estimate = 0.0, se = 0.0, lo = 0.0, hi = 0.0;
  bool covered = false;
  bool includes_one = false;
  bool rejected = false;
  double pvalue = 1.0;
  std::string scale;
  std::string error;
};

struct McSummary {
  std::string label;
  double truth = 0.0;
  double bias = 0.0, mse = 0.0, pct_rmse = 0.0;
  double coverage = 0.0, mean_width = 0.0;
  double two_step_coverage = 0.0, rejection_rate = 0.0;  // two_step only
  double mean_estimate = 0.0;
  int reps_ok = 0, reps_failed = 0;
};

struct SimulationReport {
  MonteCarloConfig config;
  std::vector<McSummary> summaries;
  std::vector<McRecord> records;  // rep-major
  std::vector<std::string> flags;
};

// Truth used for a target: exact population value for the ordinal dgps and
// quadrature on the dgp grid for the survival dgp.
double target_truth(const MonteCarloConfig& cfg, const McTarget& t);

SimulationReport monte_carlo(const MonteCarloConfig& cfg);

std::string records_csv(const SimulationReport& r);

}  // namespace releff
