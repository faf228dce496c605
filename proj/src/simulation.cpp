#include "releff/simulation.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <random>
#include <sstream>

#include "releff/error.hpp"
#include "releff/numeric.hpp"

namespace releff {

namespace {

const char* kModule = "simulation";

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

int draw_categorical(const double* p, int m, double u) {
  double c = 0.0;
  for (int i = 0; i < m - 1; ++i) {
    c += p[i];
    if (u < c) return i;
  }
  return m - 1;
}

// Population variances for a survival contrast with S(t, w) = exp(-rate(w) t),
// integrated over w by N-point Gauss-Legendre.
template <int N>
double exp_phi(const ExpSurvivalDgp& dgp, const std::vector<double>& t, const std::vector<double>& a,
               const std::function<double(double, double)>& G) {
  using Q = boost::math::quadrature::gauss<double, N>;
  const std::size_t k = a.size();
  std::vector<double> S(k), Gw(k), Sbar(k), Gbar(k);
  for (std::size_t j = 0; j < k; ++j) {
    Sbar[j] = Q::integrate([&](double w) { return std::exp(-dgp.rate(w) * t[j]); }, 0.0, 1.0);
    Gbar[j] = Q::integrate([&](double w) { return G(t[j], w); }, 0.0, 1.0);
  }
  const double adj = Q::integrate(
      [&](double w) {
        for (std::size_t j = 0; j < k; ++j) {
          S[j] = std::exp(-dgp.rate(w) * t[j]);
          Gw[j] = G(t[j], w);
        }
        return survivor_variance(S, Gw, a);
      },
      0.0, 1.0);
  return adj / survivor_variance(Sbar, Gbar, a);
}

void fill_wald(McRecord& r, double phi, double se, const MonteCarloConfig& cfg, ConfidenceSet& ci) {
  r.estimate = phi;
  r.se = se;
  Scale sc = cfg.scale;
  if (sc == Scale::logit && !(phi > 0.0 && phi < 1.0)) sc = Scale::identity;
  ci = wald_ci(phi, se, cfg.level, sc);
  r.lo = ci.lo;
  r.hi = ci.hi;
  r.scale = to_string(sc);
}

void run_ordinal_rep(const MonteCarloConfig& cfg, int rep, const std::vector<double>& truth, McRecord* out) {
  Stream s(cfg.seed, {static_cast<std::uint64_t>(rep), 0});
  const OrdinalDataset data = gen_cdc(cfg.n, s, cfg.dgp == DgpKind::cdc_null);
  const std::uint64_t split_seed = Stream(cfg.seed, {static_cast<std::uint64_t>(rep), 2})();
  const std::size_t T = cfg.targets.size();

  if (cfg.method == McMethod::bootstrap) {
    BootstrapConfig bc = cfg.bootstrap;
    bc.seed = Stream(cfg.seed, {static_cast<std::uint64_t>(rep), 1})();
    bc.progress = false;
    std::vector<Estimand> ests;
    for (const auto& t : cfg.targets) ests.push_back(t.estimand);
    const std::vector<BootstrapResult> res = run_bootstrap(compress(data), ests, bc);
    for (std::size_t t = 0; t < T; ++t) {
      McRecord& r = out[t];
      r.estimate = res[t].phi_tilde;
      r.se = res[t].se;
      r.lo = res[t].lo;
      r.hi = res[t].hi;
      r.scale = "identity";
      r.covered = truth[t] >= r.lo && truth[t] <= r.hi;
      r.ok = true;
    }
    return;
  }

  for (std::size_t t = 0; t < T; ++t) {
    McRecord& r = out[t];
    try {
      const McTarget& tg = cfg.targets[t];
      const RelEffEstimate est = estimate_releff(data, tg.estimand, tg.kind, cfg.nuisance);
      ConfidenceSet ci;
      fill_wald(r, est.phi, est.se, cfg, ci);
      r.covered = ci.contains(truth[t]);
      if (cfg.two_step) {
        const SplitTest st = split_test(data, tg.estimand, tg.kind, cfg.nuisance, cfg.level, split_seed);
        r.rejected = st.reject;
        r.pvalue = st.pvalue;
        r.includes_one = !st.reject;
      }
      r.ok = true;
    } catch (const Error& e) {
      r.error = e.what();
    }
  }
}

void run_survival_rep(const MonteCarloConfig& cfg, int rep, const std::vector<double>& truth, McRecord* out) {
  Stream s(cfg.seed, {static_cast<std::uint64_t>(rep), 0});
  const SurvivalDataset data = gen_exp_survival(cfg.n, s, cfg.exp);
  const std::uint64_t split_seed = Stream(cfg.seed, {static_cast<std::uint64_t>(rep), 2})();
  SurvivalOptions opt = cfg.survival ? *cfg.survival : default_survival(data.schema);
  if (opt.k_max == 0)
    for (const auto& t : cfg.targets) opt.k_max = std::max(opt.k_max, t.surv.k);
  const DiscreteSurvivalFit fit = fit_discrete_survival(data, opt);
  for (std::size_t t = 0; t < cfg.targets.size(); ++t) {
    McRecord& r = out[t];
    try {
      const SurvEstimand& e = cfg.targets[t].surv;
      const SurvivalReleff sr = releff_survival(data, fit, cfg.trial_censoring, e, Exec::serial);
      ConfidenceSet ci;
      fill_wald(r, sr.est.phi, sr.est.se, cfg, ci);
      r.covered = ci.contains(truth[t]);
      if (cfg.two_step) {
        const SplitTest st = split_test(data, opt, cfg.trial_censoring, e, cfg.level, split_seed);
        r.rejected = st.reject;
        r.pvalue = st.pvalue;
        r.includes_one = !st.reject;
      }
      r.ok = true;
    } catch (const Error& e) {
      r.error = e.what();
    }
  }
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::array<double, 3> CdcDgp::marginal() {
  std::array<double, 3> p{0.0, 0.0, 0.0};
  for (int g = 0; g < kGroups; ++g)
    for (int y = 0; y < 3; ++y) p[y] += p_age[g] * p_y[g][y];
  return p;
}

CovariateSchema CdcDgp::schema() {
  CovariateSchema s;
  s.columns.push_back(Covariate{"age", CovKind::continuous, {}});
  return s;
}

OrdinalDataset gen_cdc(std::size_t n, Stream& stream, bool null_outcome) {
  OrdinalDataset d;
  d.schema = CdcDgp::schema();
  d.K = 3;
  d.y.resize(n);
  d.w.resize(static_cast<Eigen::Index>(n), 1);
  const std::array<double, 3> marg = CdcDgp::marginal();
  for (std::size_t i = 0; i < n; ++i) {
    const int g = draw_categorical(CdcDgp::p_age.data(), CdcDgp::kGroups, stream.uniform());
    const double* py = null_outcome ? marg.data() : CdcDgp::p_y[g].data();
    d.y[i] = draw_categorical(py, 3, stream.uniform()) + 1;
    d.w(static_cast<Eigen::Index>(i), 0) = g + 1;
  }
  return d;
}

OrdinalDataset cdc_population(bool null_outcome) {
  OrdinalDataset d;
  d.schema = CdcDgp::schema();
  d.K = 3;
  const std::array<double, 3> marg = CdcDgp::marginal();
  std::vector<double> age;
  for (int g = 0; g < CdcDgp::kGroups; ++g)
    for (int y = 0; y < 3; ++y) {
      const double p = CdcDgp::p_age[g] * (null_outcome ? marg[y] : CdcDgp::p_y[g][y]);
      if (p <= 0.0) continue;
      d.y.push_back(y + 1);
      d.wt.push_back(p);
      age.push_back(g + 1);
    }
  d.w = Eigen::Map<Eigen::VectorXd>(age.data(), static_cast<Eigen::Index>(age.size()));
  return d;
}

CovariateSchema ExpSurvivalDgp::schema() {
  CovariateSchema s;
  s.columns.push_back(Covariate{"w", CovKind::continuous, {}});
  return s;
}

SurvivalDataset gen_exp_survival(std::size_t n, Stream& stream, const ExpSurvivalDgp& dgp) {
  if (!(dgp.grid_step > 0.0)) throw config_error("BadGrid", kModule, "grid_step must be positive");
  if (!(dgp.cens_rate >= 0.0)) throw config_error("BadRate", kModule, "censoring rate must be >= 0");
  SurvivalDataset d;
  d.schema = ExpSurvivalDgp::schema();
  d.grid = make_grid(dgp.grid_step, dgp.horizon);
  d.w.resize(static_cast<Eigen::Index>(n), 1);
  std::vector<double> times(n);
  std::vector<int> events(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = stream.uniform();
    const double rate = dgp.rate(w);
    if (!(rate > 0.0)) throw config_error("BadRate", kModule, "event rate must be positive");
    std::exponential_distribution<double> ev(rate);
    const double t = ev(stream);
    double c = kInf;
    if (dgp.cens_rate > 0.0) {
      std::exponential_distribution<double> cd(dgp.cens_rate);
      c = cd(stream);
    }
    d.w(static_cast<Eigen::Index>(i), 0) = w;
    times[i] = std::min(t, c);
    events[i] = t <= c ? 1 : 0;
  }
  bin_survival(times, events, d.grid, d.y, d.delta);
  return d;
}

double true_phi_cdc(Estimand est, Kind kind, bool null_outcome) {
  const OrdinalDataset pop = cdc_population(null_outcome);
  const VarianceBundle den = unadjusted_variance(pop, est);
  VarianceBundle num;
  if (kind == Kind::fully_adjusted) {
    NuisanceOptions opt;
    opt.strategy = MeanStrategy::group_mean;
    num = fully_adjusted_variance(pop, est, opt);
  } else if (kind == Kind::working_model) {
    NewtonOptions nopt;
    nopt.grad_tol = 1e-14;
    const WorkingModelFit fit = fit_proportional_odds(pop, nopt);
    if (!fit.converged) throw numerical_error("NonConvergedFit", kModule, "population working model did not converge");
    num = working_model_variance(pop, est, fit);
  } else {
    throw config_error("BadKind", kModule, "truth needs an adjusted kind");
  }
  return num.sigma2 / den.sigma2;
}

double true_phi_exp(const ExpSurvivalDgp& dgp, const SurvEstimand& e,
                    const std::function<double(double, double)>& G_in) {
  const std::vector<double> grid = make_grid(dgp.grid_step, dgp.horizon);
  if (e.k < 1 || e.k > static_cast<int>(grid.size()))
    throw config_error("BadTime", kModule, "time index outside the dgp grid");
  const std::vector<double> t(grid.begin(), grid.begin() + e.k);
  const std::vector<double> a = contrast_weights(e);
  const double cr = dgp.cens_rate;
  std::function<double(double, double)> G = G_in;
  if (!G) G = [cr](double tt, double) { return std::exp(-cr * tt); };
  double prev = exp_phi<64>(dgp, t, a, G);
  double cur = exp_phi<128>(dgp, t, a, G);
  if (std::abs(cur - prev) < 1e-6) return cur;
  prev = cur;
  cur = exp_phi<256>(dgp, t, a, G);
  if (std::abs(cur - prev) < 1e-6) return cur;
  prev = cur;
  cur = exp_phi<512>(dgp, t, a, G);
  if (std::abs(cur - prev) < 1e-6) return cur;
  throw numerical_error("QuadratureNonConvergence", kModule, "Gauss-Legendre did not settle by 512 points");
}

std::string to_string(DgpKind d) {
  switch (d) {
    case DgpKind::cdc: return "cdc";
    case DgpKind::cdc_null: return "cdc_null";
    case DgpKind::exp_survival: return "exp_survival";
  }
  return "?";
}

DgpKind parse_dgp(const std::string& s) {
  const std::string t = lower(s);
  if (t == "cdc") return DgpKind::cdc;
  if (t == "cdc_null") return DgpKind::cdc_null;
  if (t == "exp_survival" || t == "exp") return DgpKind::exp_survival;
  throw config_error("BadDgp", kModule, "unknown dgp '" + s + "'");
}

std::string to_string(McMethod m) { return m == McMethod::bootstrap ? "bootstrap" : "analytic"; }

McMethod parse_method(const std::string& s) {
  const std::string t = lower(s);
  if (t == "analytic") return McMethod::analytic;
  if (t == "bootstrap") return McMethod::bootstrap;
  throw config_error("BadMethod", kModule, "unknown method '" + s + "'");
}

std::string McTarget::label(bool survival) const {
  if (survival) return to_string(surv);
  return to_string(estimand) + " (" + (kind == Kind::working_model ? "W" : "F") + ")";
}

double target_truth(const MonteCarloConfig& cfg, const McTarget& t) {
  if (cfg.dgp == DgpKind::exp_survival) {
    const TrialCensoringSpec& g = cfg.trial_censoring;
    std::function<double(double, double)> G;
    switch (g.type) {
      case TrialCensoringSpec::Type::exp_rate: {
        const double r = g.rate;
        G = [r](double tt, double) { return std::exp(-r * tt); };
        break;
      }
      case TrialCensoringSpec::Type::function: {
        const auto grid = make_grid(cfg.exp.grid_step, cfg.exp.horizon);
        auto fn = g.fn;
        G = [fn, grid](double tt, double w) {
          Eigen::RowVectorXd row(1);
          row(0) = w;
          const int j = bin_index(tt, grid);
          return fn(j, tt, row);
        };
        break;
      }
      case TrialCensoringSpec::Type::marginal: {
        const auto grid = make_grid(cfg.exp.grid_step, cfg.exp.horizon);
        const auto m = g.marginal;
        if (m.size() < grid.size())
          throw config_error("BadCensoring", kModule, "marginal censoring survivor shorter than the grid");
        G = [m, grid](double tt, double) { return m[bin_index(tt, grid) - 1]; };
        break;
      }
      case TrialCensoringSpec::Type::strata:
        throw config_error("BadCensoring", kModule, "stratified censoring needs a discrete covariate");
    }
    return true_phi_exp(cfg.exp, t.surv, G);
  }
  return true_phi_cdc(t.estimand, t.kind, cfg.dgp == DgpKind::cdc_null);
}

SimulationReport monte_carlo(const MonteCarloConfig& cfg) {
  if (cfg.reps < 1) throw config_error("BadReps", kModule, "reps must be >= 1");
  if (cfg.n < 2) throw config_error("BadN", kModule, "n must be >= 2");
  if (cfg.targets.empty()) throw config_error("NoTargets", kModule, "no estimands requested");
  const bool surv = cfg.dgp == DgpKind::exp_survival;
  if (cfg.method == McMethod::bootstrap) {
    if (surv) throw config_error("UnsupportedForBootstrap", kModule, "bootstrap covers fully observed outcomes");
    for (const auto& t : cfg.targets)
      if (t.kind != Kind::working_model)
        throw config_error("UnsupportedForBootstrap", kModule, "bootstrap needs working-model estimands");
  }
  for (const auto& t : cfg.targets)
    if (!surv && t.kind == Kind::unadjusted) throw config_error("BadKind", kModule, "targets need an adjusted kind");

  SimulationReport rep;
  rep.config = cfg;
  const std::size_t T = cfg.targets.size();
  std::vector<double> truth(T);
  for (std::size_t t = 0; t < T; ++t) truth[t] = target_truth(cfg, cfg.targets[t]);

  rep.records.resize(static_cast<std::size_t>(cfg.reps) * T);
  for (int r = 0; r < cfg.reps; ++r)
    for (std::size_t t = 0; t < T; ++t) {
      rep.records[r * T + t].rep = r;
      rep.records[r * T + t].target = static_cast<int>(t);
    }
  std::vector<std::exception_ptr> fatal(cfg.reps);

#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < cfg.reps; ++r) {
    McRecord* out = &rep.records[static_cast<std::size_t>(r) * T];
    try {
      if (surv)
        run_survival_rep(cfg, r, truth, out);
      else
        run_ordinal_rep(cfg, r, truth, out);
    } catch (const Error& e) {
      for (std::size_t t = 0; t < T; ++t) out[t].error = e.what();
    } catch (...) {
      fatal[r] = std::current_exception();
    }
  }
  for (int r = 0; r < cfg.reps; ++r)
    if (fatal[r]) {
      try {
        std::rethrow_exception(fatal[r]);
      } catch (const std::exception& e) {
        throw std::runtime_error("replication " + std::to_string(r) + ": " + e.what());
      }
    }

  for (std::size_t t = 0; t < T; ++t) {
    McSummary s;
    s.label = cfg.targets[t].label(surv);
    s.truth = truth[t];
    std::vector<double> est, sq, cov, width, ts, rej;
    for (int r = 0; r < cfg.reps; ++r) {
      const McRecord& rec = rep.records[r * T + t];
      if (!rec.ok) {
        ++s.reps_failed;
        continue;
      }
      est.push_back(rec.estimate);
      sq.push_back((rec.estimate - truth[t]) * (rec.estimate - truth[t]));
      cov.push_back(rec.covered ? 1.0 : 0.0);
      width.push_back(rec.hi - rec.lo);
      ts.push_back(rec.covered || (rec.includes_one && std::abs(truth[t] - 1.0) < 1e-9) ? 1.0 : 0.0);
      rej.push_back(rec.rejected ? 1.0 : 0.0);
    }
    s.reps_ok = static_cast<int>(est.size());
    if (s.reps_ok > 0) {
      const double m = static_cast<double>(s.reps_ok);
      s.mean_estimate = pairwise_sum(est) / m;
      s.bias = s.mean_estimate - truth[t];
      s.mse = pairwise_sum(sq) / m;
      s.pct_rmse = std::sqrt(s.mse) / truth[t];
      s.coverage = pairwise_sum(cov) / m;
      s.mean_width = pairwise_sum(width) / m;
      if (cfg.two_step) {
        s.two_step_coverage = pairwise_sum(ts) / m;
        s.rejection_rate = pairwise_sum(rej) / m;
      }
    }
    if (s.reps_failed > 0)
      rep.flags.push_back(s.label + ": " + std::to_string(s.reps_failed) + " replications failed");
    rep.summaries.push_back(s);
  }
  if (cfg.reps < 2) rep.flags.push_back("low_reps: coverage from fewer than 2 replications");
  return rep;
}

std::string records_csv(const SimulationReport& r) {
  std::ostringstream os;
  os << "rep,target,label,ok,estimate,se,lo,hi,covered,includes_one,rejected,pvalue,scale,error\n";
  for (const McRecord& rec : r.records) {
    std::string err = rec.error;
    std::replace(err.begin(), err.end(), '"', '\'');
    os << rec.rep << ',' << rec.target << ',' << '"' << r.summaries[rec.target].label << '"' << ',' << rec.ok << ','
       << fmt(rec.estimate) << ',' << fmt(rec.se) << ',' << fmt(rec.lo) << ',' << fmt(rec.hi) << ',' << rec.covered
       << ',' << rec.includes_one << ',' << rec.rejected << ',' << fmt(rec.pvalue) << ',' << rec.scale << ','
       << '"' << err << '"' << '\n';
  }
  return os.str();
}

}  // namespace releff
