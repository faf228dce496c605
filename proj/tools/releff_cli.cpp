#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "releff/bootstrap.hpp"
#include "releff/error.hpp"
#include "releff/inference.hpp"
#include "releff/json_io.hpp"
#include "releff/parallel.hpp"
#include "releff/simulation.hpp"
#include "releff/survival.hpp"
#include "releff/trial.hpp"

using namespace releff;

namespace {

struct Options {
  std::string input, output, outcome = "ordinal", schema_file, censoring, csv;
  std::vector<std::string> covariates;
  int K = 0;
  std::string estimands, kinds = "fully,working", nuisance = "auto", scale = "identity";
  std::vector<double> grid;
  double bin_width = 0.0, horizon = 0.0;
  double level = 0.95;
  bool two_step = false, convex_hull = false;
  std::uint64_t split_seed = 1;
  int q_max = 5, surv_q_max = 7;
  int threads = 0;
  std::string transform;
  // bootstrap / simulate
  int B1 = 100, B2 = 0, N = 0;
  double pi = 0.5, min_valid = 0.95;
  std::uint64_t seed = 0;
  bool progress = false;
  std::string dgp = "cdc", method = "analytic";
  std::size_t n = 1000;
  int reps = 1000;
  double grid_step = 0.2, sim_horizon = 3.0, cens_rate = 0.1, base = 0.1, slope = 0.9;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

Json read_json_arg(const std::string& arg) {
  // Inline JSON when it looks like an object, otherwise a file path.
  std::string text = arg;
  if (arg.empty() || arg.front() != '{') {
    std::ifstream in(arg);
    if (!in) throw config_error("MissingFile", "cli", "cannot open '" + arg + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw config_error("BadJson", "cli", e.what());
  }
}

CovariateSchema build_schema(const Options& o) {
  if (!o.schema_file.empty()) return parse_schema(read_json_arg(o.schema_file));
  CovariateSchema s;
  for (const auto& spec : o.covariates) {
    // name:continuous or name:discrete:L1|L2|...
    const auto c1 = spec.find(':');
    Covariate cov;
    cov.name = spec.substr(0, c1);
    const std::string rest = c1 == std::string::npos ? "continuous" : spec.substr(c1 + 1);
    if (rest == "continuous") {
      cov.kind = CovKind::continuous;
    } else if (rest.rfind("discrete:", 0) == 0) {
      cov.kind = CovKind::discrete;
      std::stringstream ss(rest.substr(9));
      std::string l;
      while (std::getline(ss, l, '|')) cov.levels.push_back(l);
    } else {
      throw config_error("BadSchema", "cli", "covariate spec '" + spec + "' is not name:continuous or name:discrete:A|B");
    }
    s.columns.push_back(cov);
  }
  if (s.columns.empty()) throw config_error("BadSchema", "cli", "no covariates given (--covariate or --schema)");
  s.validate();
  return s;
}

NuisanceOptions nuisance_for(const Options& o, const CovariateSchema& s) {
  NuisanceOptions opt = default_nuisance(s, o.q_max);
  if (o.nuisance == "group_mean") opt.strategy = MeanStrategy::group_mean;
  else if (o.nuisance == "polynomial") opt.strategy = MeanStrategy::polynomial;
  else if (o.nuisance != "auto") throw config_error("BadNuisance", "cli", "unknown nuisance strategy '" + o.nuisance + "'");
  return opt;
}

SurvivalOptions survival_for(const Options& o, const CovariateSchema& s) {
  SurvivalOptions opt = default_survival(s, o.surv_q_max);
  if (o.nuisance == "stratified") opt.strategy = SurvStrategy::stratified;
  else if (o.nuisance == "logistic") opt.strategy = SurvStrategy::logistic;
  else if (o.nuisance != "auto") throw config_error("BadNuisance", "cli", "unknown survival strategy '" + o.nuisance + "'");
  return opt;
}

// rd@3, rr@3, rmst@3: contrast at time 3, mapped onto the grid.
SurvEstimand parse_surv_estimand(const std::string& s, const std::vector<double>& grid) {
  const auto at = s.find('@');
  if (at == std::string::npos) throw config_error("BadEstimand", "cli", "survival estimand '" + s + "' needs @time");
  std::string t = s.substr(0, at);
  for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  SurvEstimand e;
  if (t == "rd") e.type = SurvEstimand::Type::RD;
  else if (t == "rr") e.type = SurvEstimand::Type::RR;
  else if (t == "rmst") e.type = SurvEstimand::Type::RMST;
  else throw config_error("BadEstimand", "cli", "unknown survival estimand '" + t + "'");
  double time = 0.0;
  try {
    time = std::stod(s.substr(at + 1));
  } catch (const std::exception&) {
    throw config_error("BadEstimand", "cli", "bad time in '" + s + "'");
  }
  e.k = bin_index(time, grid);
  if (e.k == 0) throw config_error("BadTime", "cli", "time " + s.substr(at + 1) + " is past the last grid point");
  return e;
}

std::vector<Kind> parse_kinds(const std::string& s) {
  std::vector<Kind> out;
  for (const auto& k : split_list(s)) out.push_back(parse_kind(k));
  return out;
}

const TransformU* transform_for(const Options& o, int K, TransformU& storage) {
  if (o.transform.empty()) return nullptr;
  for (const auto& v : split_list(o.transform)) storage.values.push_back(std::stod(v));
  storage.validate(K);
  return &storage;
}

Json base_report(const std::string& command, const Options& o) {
  Json r;
  r["version"] = RELEFF_VERSION;
  r["command"] = command;
  Json c;
  if (!o.input.empty()) c["input"] = o.input;
  c["level"] = o.level;
  r["config"] = c;
  return r;
}

void add_inference(Json& block, const RelEffEstimate& est, const Options& o, const SplitTest* test) {
  Scale sc = parse_scale(o.scale);
  ConfidenceSet ci;
  if (sc == Scale::logit && !(est.phi > 0.0 && est.phi < 1.0)) {
    ci = wald_ci(est, o.level, Scale::identity);
    ci.flags.push_back("LogitRangeViolation: fell back to identity scale");
  } else {
    ci = wald_ci(est, o.level, sc);
  }
  if (test) {
    ci = two_step_set(ci, *test);
    if (o.convex_hull) ci = ci.hull();
    block["test"] = to_json(*test);
  }
  block["confidence_set"] = to_json(ci);
  block["sample_size_reduction"] = sample_size_reduction(est.phi);
}

Json run_estimate(const Options& o) {
  const CovariateSchema schema = build_schema(o);
  Json report = base_report("estimate", o);
  report["config"]["outcome"] = o.outcome;
  report["config"]["schema"] = to_json(schema);
  report["config"]["scale"] = o.scale;
  report["config"]["two_step"] = o.two_step;
  if (o.two_step) report["seeds"]["split"] = o.split_seed;
  Json results = Json::array();
  const std::vector<Kind> kinds = parse_kinds(o.kinds);

  if (o.outcome == "survival") {
    if (o.censoring.empty())
      throw config_error("MissingCensoring", "cli", "survival outcomes need --censoring for the trial censoring");
    const TrialCensoringSpec G = parse_censoring(read_json_arg(o.censoring));
    OutcomeSpec spec;
    spec.type = OutcomeSpec::Type::survival;
    spec.grid = o.grid;
    spec.bin_width = o.bin_width;
    spec.horizon = o.horizon;
    const SurvivalDataset data = load_survival_csv(o.input, schema, spec);
    SurvivalOptions sopt = survival_for(o, schema);
    std::vector<SurvEstimand> ests;
    for (const auto& s : split_list(o.estimands.empty() ? "rd@" + std::to_string(data.grid.back()) : o.estimands))
      ests.push_back(parse_surv_estimand(s, data.grid));
    for (const auto& e : ests) sopt.k_max = std::max(sopt.k_max, e.k);
    const DiscreteSurvivalFit fit = fit_discrete_survival(data, sopt);
    report["config"]["censoring"] = to_json(G);
    report["config"]["grid"] = data.grid;
    for (const auto& e : ests) {
      const SurvivalReleff sr = releff_survival(data, fit, G, e);
      Json b = to_json(sr.est);
      b["estimand"] = to_string(e);
      b["time"] = data.grid[e.k - 1];
      b["floored"] = sr.floored;
      SplitTest st;
      if (o.two_step) st = split_test(data, sopt, G, e, o.level, o.split_seed);
      add_inference(b, sr.est, o, o.two_step ? &st : nullptr);
      results.push_back(b);
    }
  } else if (o.outcome == "continuous") {
    const ContinuousDataset data = load_continuous_csv(o.input, schema);
    const NuisanceOptions nopt = nuisance_for(o, schema);
    for (Kind k : kinds) {
      const RelEffEstimate est = estimate_releff(data, k, nopt);
      Json b = to_json(est);
      SplitTest st;
      if (o.two_step) st = split_test(data, k, nopt, o.level, o.split_seed);
      add_inference(b, est, o, o.two_step ? &st : nullptr);
      results.push_back(b);
    }
  } else if (o.outcome == "ordinal") {
    if (o.K < 2) throw config_error("BadK", "cli", "ordinal outcomes need --K >= 2");
    const OrdinalDataset data = load_ordinal_csv(o.input, schema, o.K);
    const NuisanceOptions nopt = nuisance_for(o, schema);
    TransformU storage;
    const TransformU* u = transform_for(o, o.K, storage);
    report["config"]["K"] = o.K;
    for (const auto& es : split_list(o.estimands.empty() ? "dim,mw,lor" : o.estimands)) {
      const Estimand e = parse_estimand(es);
      for (Kind k : kinds) {
        const RelEffEstimate est = estimate_releff(data, e, k, nopt, u);
        Json b = to_json(est);
        SplitTest st;
        if (o.two_step) st = split_test(data, e, k, nopt, o.level, o.split_seed, u);
        add_inference(b, est, o, o.two_step ? &st : nullptr);
        results.push_back(b);
      }
    }
  } else {
    throw config_error("BadOutcome", "cli", "unknown outcome type '" + o.outcome + "'");
  }
  report["results"] = results;
  return report;
}

BootstrapConfig boot_config(const Options& o) {
  BootstrapConfig c;
  c.B1 = o.B1;
  c.B2 = o.B2;
  c.N = o.N;
  c.pi = o.pi;
  c.seed = o.seed;
  c.level = o.level;
  c.min_valid_fraction = o.min_valid;
  c.progress = o.progress;
  return c;
}

Json run_bootstrap_cmd(const Options& o, bool kind_given) {
  if (kind_given)
    for (Kind k : parse_kinds(o.kinds))
      if (k != Kind::working_model)
        throw config_error("UnsupportedForBootstrap", "double_bootstrap",
                           "the double bootstrap covers working-model estimators only");
  const CovariateSchema schema = build_schema(o);
  Json report = base_report("bootstrap", o);
  report["config"]["outcome"] = o.outcome;
  report["config"]["schema"] = to_json(schema);
  report["seeds"]["bootstrap"] = o.seed;
  BootstrapConfig cfg = boot_config(o);
  Json results = Json::array();
  const NuisanceOptions nopt = nuisance_for(o, schema);

  if (o.outcome == "ordinal") {
    if (o.K < 2) throw config_error("BadK", "cli", "ordinal outcomes need --K >= 2");
    const OrdinalDataset data = load_ordinal_csv(o.input, schema, o.K);
    TransformU storage;
    const TransformU* u = transform_for(o, o.K, storage);
    std::vector<Estimand> ests;
    for (const auto& es : split_list(o.estimands.empty() ? "dim,mw,lor" : o.estimands)) ests.push_back(parse_estimand(es));
    cfg = cfg.resolved(data.n());
    const std::vector<BootstrapResult> res = run_bootstrap(compress(data), ests, cfg, u);
    for (std::size_t i = 0; i < ests.size(); ++i) {
      Json b;
      b["estimand"] = to_string(ests[i]);
      b["kind"] = to_string(Kind::working_model);
      b["bootstrap"] = to_json(res[i]);
      const RelEffEstimate est = estimate_releff(data, ests[i], Kind::working_model, nopt, u);
      Json a = to_json(est);
      add_inference(a, est, o, nullptr);
      b["analytic"] = a;
      results.push_back(b);
    }
  } else if (o.outcome == "continuous") {
    const ContinuousDataset data = load_continuous_csv(o.input, schema);
    cfg = cfg.resolved(data.n());
    const BootstrapResult res = run_bootstrap(data, cfg);
    Json b;
    b["estimand"] = "ATE";
    b["kind"] = to_string(Kind::working_model);
    b["bootstrap"] = to_json(res);
    const RelEffEstimate est = estimate_releff(data, Kind::working_model, nopt);
    Json a = to_json(est);
    add_inference(a, est, o, nullptr);
    b["analytic"] = a;
    results.push_back(b);
  } else if (o.outcome == "survival") {
    throw config_error("UnsupportedForBootstrap", "double_bootstrap", "the double bootstrap covers fully observed outcomes");
  } else {
    throw config_error("BadOutcome", "cli", "unknown outcome type '" + o.outcome + "'");
  }
  report["config"]["bootstrap"] = to_json(cfg);
  report["results"] = results;
  return report;
}

Json run_simulate(const Options& o, std::string& csv) {
  MonteCarloConfig c;
  c.dgp = parse_dgp(o.dgp);
  c.method = parse_method(o.method);
  c.n = o.n;
  c.reps = o.reps;
  c.seed = o.seed;
  c.level = o.level;
  c.scale = parse_scale(o.scale);
  c.two_step = o.two_step;
  c.exp.base = o.base;
  c.exp.slope = o.slope;
  c.exp.cens_rate = o.cens_rate;
  c.exp.grid_step = o.grid_step;
  c.exp.horizon = o.sim_horizon;
  c.bootstrap = boot_config(o);
  c.bootstrap.progress = false;
  if (c.dgp == DgpKind::exp_survival) {
    c.trial_censoring = o.censoring.empty() ? TrialCensoringSpec::exponential(o.cens_rate)
                                            : parse_censoring(read_json_arg(o.censoring));
    const std::vector<double> grid = make_grid(o.grid_step, o.sim_horizon);
    const std::string list = o.estimands.empty() ? "rd@1,rd@2,rd@3,rmst@3" : o.estimands;
    for (const auto& s : split_list(list)) {
      McTarget t;
      t.surv = parse_surv_estimand(s, grid);
      c.targets.push_back(t);
    }
  } else {
    c.nuisance.strategy = MeanStrategy::group_mean;
    if (o.nuisance == "polynomial") c.nuisance.strategy = MeanStrategy::polynomial;
    c.nuisance.q_max = o.q_max;
    for (const auto& es : split_list(o.estimands.empty() ? "dim,mw,lor" : o.estimands))
      for (Kind k : parse_kinds(o.kinds)) c.targets.push_back({parse_estimand(es), k, {}});
  }
  const SimulationReport rep = monte_carlo(c);
  Json report = base_report("simulate", o);
  report["config"] = to_json(c);
  report["seeds"]["simulation"] = o.seed;
  Json body = to_json(rep);
  body.erase("config");
  report["report"] = body;
  csv = records_csv(rep);
  return report;
}

void write_out(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw config_error("BadOutput", "cli", "cannot write '" + path + "'");
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relative efficiency of covariate-adjusted estimators from external data"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sc) {
    sc->add_option("--output,-o", o.output, "Output JSON path (default stdout)");
    sc->add_option("--threads", o.threads, "Thread cap (fallback: RELEFF_THREADS)");
    sc->add_option("--level", o.level, "Confidence level")->check(CLI::Range(0.0, 1.0));
    sc->add_option("--scale", o.scale, "identity or logit");
    sc->add_option("--estimand", o.estimands, "Comma list: dim,mw,lor,ate or rd@t,rr@t,rmst@t");
    sc->add_option("--nuisance", o.nuisance, "auto, group_mean, polynomial, stratified, logistic");
    sc->add_option("--q-max", o.q_max, "Largest polynomial degree for conditional means");
  };
  auto add_data = [&](CLI::App* sc) {
    sc->add_option("--input,-i", o.input, "CSV input")->required();
    sc->add_option("--outcome", o.outcome, "ordinal, continuous or survival");
    sc->add_option("--K", o.K, "Number of ordinal levels");
    sc->add_option("--covariate", o.covariates, "name:continuous or name:discrete:A|B|C (repeatable)");
    sc->add_option("--schema", o.schema_file, "Covariate schema JSON (file or inline)");
    sc->add_option("--transform", o.transform, "Comma list of scores u(1..K) for DIM");
  };

  CLI::App* est = app.add_subcommand("estimate", "Analytic relative efficiency with Wald and two-step sets");
  add_common(est);
  add_data(est);
  est->add_option("--kind", o.kinds, "Comma list: fully,working");
  est->add_option("--censoring", o.censoring, "Trial censoring spec JSON (file or inline), survival only");
  est->add_option("--grid", o.grid, "Explicit survival grid")->delimiter(',');
  est->add_option("--bin-width", o.bin_width, "Survival bin width when no grid is given");
  est->add_option("--horizon", o.horizon, "Last survival grid point (0 = cover the data)");
  est->add_option("--surv-q-max", o.surv_q_max, "Largest polynomial degree in the hazard model");
  est->add_flag("--two-step", o.two_step, "Attach the sample-splitting test and two-step set");
  est->add_flag("--convex-hull", o.convex_hull, "Report the convex hull of the two-step set");
  est->add_option("--split-seed", o.split_seed, "Seed of the sample split");

  CLI::App* boot = app.add_subcommand("bootstrap", "Double bootstrap for working-model estimators");
  add_common(boot);
  add_data(boot);
  CLI::Option* kind_opt = boot->add_option("--kind", o.kinds, "Must be working");
  boot->add_option("--B1", o.B1, "Outer replicates");
  boot->add_option("--B2", o.B2, "Inner replicates (0 = max(2n, 500))");
  boot->add_option("--N", o.N, "Inner trial size (0 = max(4n, 2000))");
  boot->add_option("--pi", o.pi, "Treatment probability");
  boot->add_option("--min-valid", o.min_valid, "Smallest tolerated fraction of valid inner replicates");
  boot->add_option("--seed", o.seed, "Seed")->required();
  boot->add_flag("--progress", o.progress, "Replicate counts on stderr");

  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo study on a built-in data-generating process");
  add_common(sim);
  sim->add_option("--dgp", o.dgp, "cdc, cdc_null or exp_survival");
  sim->add_option("--kind", o.kinds, "Comma list: fully,working");
  sim->add_option("--method", o.method, "analytic or bootstrap");
  sim->add_option("--n", o.n, "Sample size per replication");
  sim->add_option("--reps", o.reps, "Replications");
  sim->add_option("--seed", o.seed, "Seed")->required();
  sim->add_flag("--two-step", o.two_step, "Also run the split test and two-step set");
  sim->add_option("--csv", o.csv, "Per-replication CSV path");
  sim->add_option("--B1", o.B1, "Outer bootstrap replicates");
  sim->add_option("--B2", o.B2, "Inner bootstrap replicates");
  sim->add_option("--N", o.N, "Inner trial size");
  sim->add_option("--pi", o.pi, "Treatment probability");
  sim->add_option("--grid-step", o.grid_step, "Survival grid step");
  sim->add_option("--horizon", o.sim_horizon, "Survival horizon");
  sim->add_option("--cens-rate", o.cens_rate, "External-data censoring rate");
  sim->add_option("--base", o.base, "Event rate intercept");
  sim->add_option("--slope", o.slope, "Event rate slope in W");
  sim->add_option("--censoring", o.censoring, "Trial censoring spec JSON (default exp_rate = --cens-rate)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    int threads = o.threads;
    if (threads <= 0)
      if (const char* env = std::getenv("RELEFF_THREADS")) threads = std::atoi(env);
    set_threads(threads);

    Json report;
    std::string csv;
    if (est->parsed()) {
      report = run_estimate(o);
    } else if (boot->parsed()) {
      report = run_bootstrap_cmd(o, kind_opt->count() > 0);
    } else {
      // Simulation intervals default to the logit scale.
      if (sim->get_option("--scale")->count() == 0) o.scale = "logit";
      report = run_simulate(o, csv);
      if (!o.csv.empty()) write_out(o.csv, csv);
    }
    write_out(o.output, report.dump(2) + "\n");
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.family());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorFamily::numerical);
  }
}
