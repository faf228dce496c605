#include "releff/json_io.hpp"

#include <cmath>

#include "releff/error.hpp"

namespace releff {

namespace {

const char* kModule = "cli";

// JSON has no infinities; they are written as strings.
Json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

Json nums(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

Json nums(const Eigen::VectorXd& v) { return nums(std::vector<double>(v.data(), v.data() + v.size())); }

}  // namespace

Json to_json(const RelEffEstimate& e) {
  Json j;
  j["estimand"] = to_string(e.estimand);
  j["kind"] = to_string(e.kind);
  j["phi"] = num(e.phi);
  j["se"] = num(e.se);
  j["n"] = e.n;
  j["sigma2_adjusted"] = num(e.sigma2_num);
  j["sigma2_unadjusted"] = num(e.sigma2_den);
  j["warnings"] = e.warnings;
  return j;
}

Json to_json(const ConfidenceSet& c) {
  Json j;
  j["scale"] = to_string(c.scale);
  j["level"] = c.level;
  j["interval"] = Json::array({num(c.lo), num(c.hi)});
  j["includes_one"] = c.includes_one;
  j["flags"] = c.flags;
  return j;
}

Json to_json(const SplitTest& t) {
  Json j;
  j["statistic"] = num(t.statistic);
  j["pvalue"] = num(t.pvalue);
  j["reject"] = t.reject;
  j["phi_split"] = num(t.phi_split);
  j["se"] = num(t.se);
  j["seed"] = t.seed;
  j["n1"] = t.n1;
  j["n2"] = t.n2;
  return j;
}

Json to_json(const BootstrapConfig& c) {
  Json j;
  j["B1"] = c.B1;
  j["B2"] = c.B2;
  j["N"] = c.N;
  j["pi"] = c.pi;
  j["seed"] = c.seed;
  j["level"] = c.level;
  j["min_valid_fraction"] = c.min_valid_fraction;
  return j;
}

Json to_json(const BootstrapResult& r) {
  Json j;
  j["phi_tilde"] = num(r.phi_tilde);
  j["se"] = num(r.se);
  j["ci"] = Json::array({num(r.lo), num(r.hi)});
  j["replicate_values"] = nums(r.replicate_values);
  j["invalid_inner_counts"] = r.invalid_inner_counts;
  j["config"] = to_json(r.config);
  j["warnings"] = r.warnings;
  return j;
}

Json to_json(const CovariateSchema& s) {
  Json cols = Json::array();
  for (const auto& c : s.columns) {
    Json j;
    j["name"] = c.name;
    j["kind"] = c.kind == CovKind::discrete ? "discrete" : "continuous";
    if (c.kind == CovKind::discrete) j["levels"] = c.levels;
    cols.push_back(j);
  }
  Json j;
  j["covariates"] = cols;
  return j;
}

Json to_json(const TrialCensoringSpec& g) {
  Json j;
  switch (g.type) {
    case TrialCensoringSpec::Type::marginal: j["marginal"] = nums(g.marginal); break;
    case TrialCensoringSpec::Type::strata: {
      Json s;
      for (const auto& [k, v] : g.strata) s[k] = nums(v);
      j["strata"] = s;
      break;
    }
    case TrialCensoringSpec::Type::exp_rate: j["exp_rate"] = g.rate; break;
    case TrialCensoringSpec::Type::function: j["function"] = "user-supplied"; break;
  }
  return j;
}

Json to_json(const WorkingModelFit& f) {
  Json j;
  j["alpha"] = nums(f.alpha);
  j["beta"] = nums(f.beta);
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  j["grad_norm"] = num(f.grad_norm);
  j["warnings"] = f.warnings;
  return j;
}

Json to_json(const MonteCarloConfig& c) {
  const bool surv = c.dgp == DgpKind::exp_survival;
  Json j;
  j["dgp"] = to_string(c.dgp);
  if (surv) {
    Json e;
    e["base"] = c.exp.base;
    e["slope"] = c.exp.slope;
    e["cens_rate"] = c.exp.cens_rate;
    e["grid_step"] = c.exp.grid_step;
    e["horizon"] = c.exp.horizon;
    j["exp_survival"] = e;
    j["trial_censoring"] = to_json(c.trial_censoring);
  }
  Json t = Json::array();
  for (const auto& tg : c.targets) t.push_back(tg.label(surv));
  j["targets"] = t;
  j["method"] = to_string(c.method);
  j["n"] = c.n;
  j["reps"] = c.reps;
  j["seed"] = c.seed;
  j["level"] = c.level;
  j["scale"] = to_string(c.scale);
  j["two_step"] = c.two_step;
  if (!surv) j["nuisance"] = c.nuisance.strategy == MeanStrategy::group_mean ? "group_mean" : "polynomial";
  if (c.method == McMethod::bootstrap) j["bootstrap"] = to_json(c.bootstrap);
  return j;
}

Json to_json(const McSummary& s) {
  Json j;
  j["label"] = s.label;
  j["truth"] = num(s.truth);
  j["mean_estimate"] = num(s.mean_estimate);
  j["bias"] = num(s.bias);
  j["mse"] = num(s.mse);
  j["pct_rmse"] = num(s.pct_rmse);
  j["coverage"] = num(s.coverage);
  j["mean_ci_width"] = num(s.mean_width);
  j["two_step_coverage"] = num(s.two_step_coverage);
  j["rejection_rate"] = num(s.rejection_rate);
  j["reps_ok"] = s.reps_ok;
  j["reps_failed"] = s.reps_failed;
  return j;
}

Json to_json(const SimulationReport& r) {
  Json j;
  j["config"] = to_json(r.config);
  Json s = Json::array();
  for (const auto& m : r.summaries) s.push_back(to_json(m));
  j["summaries"] = s;
  j["flags"] = r.flags;
  return j;
}

TrialCensoringSpec parse_censoring(const Json& j) {
  auto series = [](const Json& a, const std::string& what) {
    if (!a.is_array() || a.empty()) throw config_error("BadCensoring", kModule, what + " must be a non-empty array");
    std::vector<double> v;
    for (const auto& x : a) {
      if (!x.is_number()) throw config_error("BadCensoring", kModule, what + " holds a non-number");
      v.push_back(x.get<double>());
    }
    return v;
  };
  if (!j.is_object() || j.size() != 1)
    throw config_error("BadCensoring", kModule, "censoring spec must be an object with exactly one key");
  TrialCensoringSpec g;
  if (j.contains("marginal")) {
    g.type = TrialCensoringSpec::Type::marginal;
    g.marginal = series(j["marginal"], "marginal");
  } else if (j.contains("strata")) {
    g.type = TrialCensoringSpec::Type::strata;
    if (!j["strata"].is_object()) throw config_error("BadCensoring", kModule, "strata must be an object");
    for (const auto& [k, v] : j["strata"].items()) g.strata[k] = series(v, "stratum '" + k + "'");
  } else if (j.contains("exp_rate")) {
    if (!j["exp_rate"].is_number()) throw config_error("BadCensoring", kModule, "exp_rate must be a number");
    g = TrialCensoringSpec::exponential(j["exp_rate"].get<double>());
  } else if (j.contains("exp_linear")) {
    const Json& e = j["exp_linear"];
    const double a = e.value("rate", 0.0), b = e.value("slope", 0.0);
    const int c = e.value("column", 0);
    g.type = TrialCensoringSpec::Type::function;
    g.fn = [a, b, c](int, double t, const Eigen::Ref<const Eigen::RowVectorXd>& w) {
      if (c < 0 || c >= w.size()) throw config_error("BadCensoring", kModule, "exp_linear column out of range");
      return std::exp(-(a + b * w(c)) * t);
    };
  } else {
    throw config_error("BadCensoring", kModule, "unknown censoring spec key '" + j.begin().key() + "'");
  }
  return g;
}

CovariateSchema parse_schema(const Json& j) {
  if (!j.is_object() || !j.contains("covariates") || !j["covariates"].is_array())
    throw config_error("BadSchema", kModule, "schema needs a 'covariates' array");
  CovariateSchema s;
  for (const auto& c : j["covariates"]) {
    Covariate cov;
    cov.name = c.value("name", std::string());
    const std::string kind = c.value("kind", std::string("continuous"));
    if (kind == "discrete") {
      cov.kind = CovKind::discrete;
      if (!c.contains("levels")) throw config_error("BadSchema", kModule, "discrete '" + cov.name + "' needs levels");
      for (const auto& l : c["levels"]) cov.levels.push_back(l.is_string() ? l.get<std::string>() : l.dump());
    } else if (kind == "continuous") {
      cov.kind = CovKind::continuous;
    } else {
      throw config_error("BadSchema", kModule, "unknown covariate kind '" + kind + "'");
    }
    s.columns.push_back(cov);
  }
  s.validate();
  return s;
}

}  // namespace releff
