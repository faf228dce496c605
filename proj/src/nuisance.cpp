#include "releff/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "releff/error.hpp"
#include "releff/numeric.hpp"

namespace releff {

namespace {

const char* kModule = "nuisance";

double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

std::vector<double> row_key(const Eigen::Ref<const Eigen::RowVectorXd>& w) {
  return std::vector<double>(w.data(), w.data() + w.size());
}

}  // namespace

// ---------------------------------------------------------------- Basis

Basis Basis::make(const CovariateSchema& schema, const Eigen::MatrixXd& w, const std::vector<double>& wt, int degree,
                  bool standardize) {
  Basis b;
  b.schema_ = schema;
  b.degree_ = std::max(degree, 1);
  b.center_.assign(schema.d(), 0.0);
  b.scale_.assign(schema.d(), 1.0);
  for (std::size_t c = 0; c < schema.d(); ++c) {
    const auto& cov = schema.columns[c];
    if (cov.kind == CovKind::discrete) {
      b.dim_ += static_cast<int>(cov.levels.size()) - 1;
      continue;
    }
    b.dim_ += b.degree_;
    if (standardize && w.rows() > 0) {
      std::vector<double> col(w.rows());
      for (Eigen::Index i = 0; i < w.rows(); ++i) col[i] = w(i, c);
      const double m = weighted_mean(col, wt);
      for (auto& v : col) v = (v - m) * (v - m);
      const double sd = std::sqrt(weighted_mean(col, wt));
      b.center_[c] = m;
      b.scale_[c] = sd > 0 ? sd : 1.0;
    }
  }
  return b;
}

void Basis::expand_row(const Eigen::Ref<const Eigen::RowVectorXd>& w, double* out) const {
  int o = 0;
  for (std::size_t c = 0; c < schema_.d(); ++c) {
    const auto& cov = schema_.columns[c];
    if (cov.kind == CovKind::discrete) {
      const int L = static_cast<int>(cov.levels.size());
      const int lv = static_cast<int>(w[c]);
      for (int l = 1; l < L; ++l) out[o++] = (lv == l) ? 1.0 : 0.0;
    } else {
      const double z = (w[c] - center_[c]) / scale_[c];
      double p = 1.0;
      for (int q = 1; q <= degree_; ++q) {
        p *= z;
        out[o++] = p;
      }
    }
  }
}

Eigen::MatrixXd Basis::expand(const Eigen::MatrixXd& w) const {
  Eigen::MatrixXd X(w.rows(), dim_);
  std::vector<double> buf(dim_);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    expand_row(w.row(i), buf.data());
    for (int j = 0; j < dim_; ++j) X(i, j) = buf[j];
  }
  return X;
}

Eigen::MatrixXd working_design(const CovariateSchema& schema, const Eigen::MatrixXd& w) {
  return Basis::make(schema, w, {}, 1, false).expand(w);
}

// ---------------------------------------------------------------- OLS

LinearFit fit_ols(const Eigen::MatrixXd& X, const std::vector<double>& y, const std::vector<double>& wt) {
  const Eigen::Index n = X.rows(), p = X.cols();
  Eigen::MatrixXd A(n, p + 1);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = std::sqrt(wt_at(wt, i));
    A(i, 0) = s;
    A.row(i).tail(p) = s * X.row(i);
    b[i] = s * y[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < p + 1) throw numerical_error("SingularDesign", kModule, "design [1, W] is rank deficient");
  const Eigen::VectorXd coef = qr.solve(b);
  LinearFit f;
  f.alpha = coef[0];
  f.beta = coef.tail(p);
  return f;
}

LinearFit fit_ols(const ContinuousDataset& data) {
  return fit_ols(working_design(data.schema, data.w), data.y, data.wt);
}

// ---------------------------------------------------------------- grouped logistic

LogLikDerivatives grouped_logistic_derivatives(const GroupedLogisticProblem& prob, const std::vector<int>& free_groups,
                                               const Eigen::VectorXd& params) {
  const int nf = static_cast<int>(free_groups.size());
  const int p = static_cast<int>(prob.X.cols());
  std::vector<int> slot(prob.n_groups, -1);
  for (int f = 0; f < nf; ++f) slot[free_groups[f]] = f;
  LogLikDerivatives d;
  d.grad = Eigen::VectorXd::Zero(nf + p);
  d.hess = Eigen::MatrixXd::Zero(nf + p, nf + p);
  const Eigen::VectorXd beta = params.tail(p);
  Eigen::MatrixXd hbb = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t i = 0; i < prob.group.size(); ++i) {
    const int f = slot[prob.group[i]];
    if (f < 0) continue;
    const double w = wt_at(prob.wt, i);
    if (w == 0.0) continue;
    const auto x = prob.X.row(i);
    const double eta = params[f] + (p ? x.dot(beta) : 0.0);
    const double pr = expit(eta);
    const double r = prob.r[i];
    d.value += w * (r * eta - log1pexp(eta));
    const double res = w * (r - pr);
    const double v = w * pr * (1.0 - pr);
    d.grad[f] += res;
    d.hess(f, f) -= v;
    if (p) {
      d.grad.tail(p) += res * x.transpose();
      d.hess.block(f, nf, 1, p) -= v * x;
      hbb.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), -v);
    }
  }
  if (p) {
    d.hess.block(nf, nf, p, p) = hbb.selfadjointView<Eigen::Lower>();
    d.hess.block(nf, 0, p, nf) = d.hess.block(0, nf, nf, p).transpose();
  }
  return d;
}

GroupedLogisticFit fit_grouped_logistic(const GroupedLogisticProblem& prob, const NewtonOptions& opt) {
  const int G = prob.n_groups;
  const int p = static_cast<int>(prob.X.cols());
  std::vector<double> ones(G, 0.0), zeros(G, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < prob.group.size(); ++i) {
    const double w = wt_at(prob.wt, i);
    total += w;
    (prob.r[i] > 0.5 ? ones : zeros)[prob.group[i]] += w;
  }
  GroupedLogisticFit fit;
  fit.alpha = Eigen::VectorXd::Zero(G);
  fit.beta = Eigen::VectorXd::Zero(p);
  std::vector<int> free_groups;
  for (int g = 0; g < G; ++g) {
    if (ones[g] <= 0.0) {
      fit.alpha[g] = -kInf;
    } else if (zeros[g] <= 0.0) {
      fit.alpha[g] = kInf;
    } else {
      free_groups.push_back(g);
    }
  }
  const int nf = static_cast<int>(free_groups.size());
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(nf + p);
  for (int f = 0; f < nf; ++f) {
    const int g = free_groups[f];
    theta[f] = std::clamp(logit(ones[g] / (ones[g] + zeros[g])), -opt.start_clip, opt.start_clip);
  }
  if (total <= 0.0) total = 1.0;

  if (nf == 0) {
    // Every level is degenerate; beta is not identified, keep it at zero.
    fit.status = FitStatus::converged;
    return fit;
  }

  LogLikDerivatives d = grouped_logistic_derivatives(prob, free_groups, theta);
  for (int it = 0;; ++it) {
    fit.iterations = it;
    fit.grad_norm = d.grad.norm() / total;
    if (fit.grad_norm <= opt.grad_tol) {
      fit.status = FitStatus::converged;
      break;
    }
    if (it >= opt.max_iter) {
      fit.status = FitStatus::max_iter;
      break;
    }
    const Eigen::MatrixXd info = -d.hess;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    const Eigen::VectorXd D = ldlt.vectorD();
    const double dmax = D.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || D.minCoeff() <= 1e-13 * std::max(dmax, 1e-300)) {
      if (it == 0) throw numerical_error("SingularDesign", kModule, "information matrix is singular at the start");
      fit.status = FitStatus::separation;
      break;
    }
    const Eigen::VectorXd step = ldlt.solve(d.grad);
    double s = 1.0;
    LogLikDerivatives trial;
    Eigen::VectorXd cand;
    for (int h = 0; h < 60; ++h) {
      cand = theta + s * step;
      trial = grouped_logistic_derivatives(prob, free_groups, cand);
      if (std::isfinite(trial.value) && trial.value >= d.value - 1e-12 * std::abs(d.value)) break;
      s *= 0.5;
    }
    theta = cand;
    d = std::move(trial);
  }
  fit.loglik = d.value;
  for (int f = 0; f < nf; ++f) fit.alpha[free_groups[f]] = theta[f];
  fit.beta = theta.tail(p);

  double max_eta = 0.0;
  for (std::size_t i = 0; i < prob.group.size(); ++i) {
    const double a = fit.alpha[prob.group[i]];
    if (!std::isfinite(a) || wt_at(prob.wt, i) == 0.0) continue;
    max_eta = std::max(max_eta, std::abs(a + (p ? prob.X.row(i).dot(fit.beta) : 0.0)));
  }
  if (max_eta > opt.separation_eta) fit.status = FitStatus::separation;
  return fit;
}

// ---------------------------------------------------------------- proportional odds

double WorkingModelFit::theta(int k, const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const double a = alpha[k - 1];
  if (!std::isfinite(a)) return a > 0 ? 1.0 : 0.0;
  return expit(a + (beta.size() ? x.dot(beta) : 0.0));
}

WorkingModelFit fit_proportional_odds(const std::vector<int>& y, int K, const Eigen::MatrixXd& X,
                                      const std::vector<double>& wt, const NewtonOptions& opt) {
  if (K < 2) throw config_error("BadLevel", kModule, "proportional odds needs K >= 2");
  const std::size_t n = y.size();
  GroupedLogisticProblem prob;
  prob.n_groups = K - 1;
  prob.X.resize(static_cast<Eigen::Index>(n) * (K - 1), X.cols());
  prob.group.resize(n * (K - 1));
  prob.r.resize(n * (K - 1));
  if (!wt.empty()) prob.wt.resize(n * (K - 1));
  std::size_t row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 1; k < K; ++k, ++row) {
      prob.group[row] = k - 1;
      prob.r[row] = y[i] <= k ? 1.0 : 0.0;
      prob.X.row(row) = X.row(i);
      if (!wt.empty()) prob.wt[row] = wt[i];
    }
  }
  const GroupedLogisticFit g = fit_grouped_logistic(prob, opt);
  WorkingModelFit f;
  f.alpha = g.alpha;
  f.beta = g.beta;
  f.status = g.status;
  f.converged = g.converged();
  f.iterations = g.iterations;
  f.grad_norm = g.grad_norm;
  for (int k = 1; k + 1 < K; ++k)
    if (f.alpha[k] < f.alpha[k - 1]) {
      f.warnings.push_back("proportional-odds thresholds are not monotone (level " + std::to_string(k) + ")");
      break;
    }
  if (g.status == FitStatus::separation) f.warnings.push_back("proportional-odds fit shows separation");
  if (g.status == FitStatus::max_iter) f.warnings.push_back("proportional-odds fit hit the iteration limit");
  return f;
}

WorkingModelFit fit_proportional_odds(const OrdinalDataset& data, const NewtonOptions& opt) {
  return fit_proportional_odds(data.y, data.K, working_design(data.schema, data.w), data.wt, opt);
}

// ---------------------------------------------------------------- conditional means

NuisanceOptions default_nuisance(const CovariateSchema& schema, int q_max) {
  NuisanceOptions o;
  o.strategy = schema.all_discrete() ? MeanStrategy::group_mean : MeanStrategy::polynomial;
  o.q_max = q_max;
  return o;
}

ConditionalMeanModel ConditionalMeanModel::fit(const std::vector<double>& targets, const CovariateSchema& schema,
                                               const Eigen::MatrixXd& w, const std::vector<double>& wt,
                                               const NuisanceOptions& opt) {
  const std::size_t n = targets.size();
  if (n < 2) throw data_error("TooFewObservations", kModule, "conditional mean needs n >= 2");
  ConditionalMeanModel m;
  m.strategy_ = opt.strategy;
  m.grand_mean_ = weighted_mean(targets, wt);
  m.lo_ = *std::min_element(targets.begin(), targets.end());
  m.hi_ = *std::max_element(targets.begin(), targets.end());
  m.fitted_.resize(n);

  if (opt.strategy == MeanStrategy::group_mean) {
    std::map<std::vector<double>, std::pair<double, double>> acc;
    for (std::size_t i = 0; i < n; ++i) {
      auto& a = acc[row_key(w.row(i))];
      a.first += wt_at(wt, i) * targets[i];
      a.second += wt_at(wt, i);
    }
    for (auto& [k, a] : acc) m.cells_[k] = a.second > 0 ? a.first / a.second : m.grand_mean_;
    for (std::size_t i = 0; i < n; ++i) m.fitted_[i] = m.cells_.at(row_key(w.row(i)));
    return m;
  }

  if (!schema.has_continuous())
    throw config_error("BadStrategy", kModule, "polynomial strategy needs a continuous covariate");
  const double N = weight_total(wt, n);
  double tss = 0.0;
  for (std::size_t i = 0; i < n; ++i) tss += wt_at(wt, i) * (targets[i] - m.grand_mean_) * (targets[i] - m.grand_mean_);
  const double rss_floor = 1e-24 * tss + 1e-300;
  double best = kInf;
  for (int q = 1; q <= opt.q_max; ++q) {
    Basis b = Basis::make(schema, w, wt, q, true);
    if (b.dim() + 1 >= static_cast<int>(n)) break;
    const Eigen::MatrixXd X = b.expand(w);
    LinearFit lf;
    try {
      lf = fit_ols(X, targets, wt);
    } catch (const Error&) {
      m.bic_.push_back(kInf);
      continue;
    }
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = targets[i] - lf.predict(X.row(i));
      rss += wt_at(wt, i) * e * e;
    }
    const double bic = N * std::log(std::max(rss, rss_floor) / N) + (b.dim() + 1) * std::log(N);
    m.bic_.push_back(bic);
    if (bic < best) {
      best = bic;
      m.degree_ = q;
      m.basis_ = b;
      m.lin_ = lf;
    }
  }
  if (m.degree_ == 0) throw numerical_error("SingularDesign", kModule, "no polynomial degree could be fitted");
  for (std::size_t i = 0; i < n; ++i) m.fitted_[i] = m.predict(w.row(i));
  return m;
}

double ConditionalMeanModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& w, bool* fallback) const {
  if (fallback) *fallback = false;
  if (strategy_ == MeanStrategy::group_mean) {
    auto it = cells_.find(row_key(w));
    if (it == cells_.end()) {
      if (fallback) *fallback = true;
      return grand_mean_;
    }
    return it->second;
  }
  std::vector<double> x(basis_.dim());
  basis_.expand_row(w, x.data());
  const double v = lin_.alpha + Eigen::Map<const Eigen::VectorXd>(x.data(), x.size()).dot(lin_.beta);
  return std::clamp(v, lo_, hi_);
}

ConditionalCdf fit_conditional_cdf(const OrdinalDataset& data, const NuisanceOptions& opt) {
  const std::size_t n = data.n();
  const int K = data.K;
  ConditionalCdf out;
  out.strategy = opt.strategy;
  out.theta.resize(n, K - 1);

  if (opt.strategy == MeanStrategy::group_mean) {
    const CellIndex cells = cell_index(data.w);
    Eigen::MatrixXd cnt = Eigen::MatrixXd::Zero(cells.n_cells, K);
    for (std::size_t i = 0; i < n; ++i) cnt(cells.ids[i], data.y[i] - 1) += wt_at(data.wt, i);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = cells.ids[i];
      const double tot = cnt.row(c).sum();
      double acc = 0.0;
      for (int k = 1; k < K; ++k) {
        acc += cnt(c, k - 1);
        out.theta(i, k - 1) = acc / tot;
      }
    }
    return out;
  }

  if (!data.schema.has_continuous())
    throw config_error("BadStrategy", kModule, "polynomial strategy needs a continuous covariate");
  const double N = data.total_weight();
  double best = kInf;
  for (int q = 1; q <= opt.q_max; ++q) {
    Basis b = Basis::make(data.schema, data.w, data.wt, q, true);
    if (b.dim() + 1 >= static_cast<int>(n)) break;
    GroupedLogisticProblem prob;
    prob.n_groups = 1;
    prob.X = b.expand(data.w);
    prob.group.assign(n, 0);
    prob.wt = data.wt;
    Eigen::MatrixXd th(n, K - 1);
    double bic = 0.0;
    bool ok = true;
    for (int k = 1; k < K && ok; ++k) {
      prob.r.resize(n);
      for (std::size_t i = 0; i < n; ++i) prob.r[i] = data.y[i] <= k ? 1.0 : 0.0;
      GroupedLogisticFit f;
      try {
        f = fit_grouped_logistic(prob);
      } catch (const Error&) {
        ok = false;
        break;
      }
      bic += -2.0 * f.loglik + (b.dim() + 1) * std::log(N);
      for (std::size_t i = 0; i < n; ++i) {
        const double a = f.alpha[0];
        th(i, k - 1) = std::isfinite(a) ? expit(a + prob.X.row(i).dot(f.beta)) : (a > 0 ? 1.0 : 0.0);
      }
    }
    if (!ok) continue;
    if (bic < best) {
      best = bic;
      out.degree = q;
      out.theta = th;
    }
  }
  if (out.degree == 0) throw numerical_error("SingularDesign", kModule, "no conditional CDF degree could be fitted");
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 2; k < K; ++k) out.theta(i, k - 1) = std::max(out.theta(i, k - 1), out.theta(i, k - 2));
  return out;
}

// ---------------------------------------------------------------- discrete survival

SurvivalOptions default_survival(const CovariateSchema& schema, int q_max) {
  SurvivalOptions o;
  o.strategy = schema.all_discrete() ? SurvStrategy::stratified : SurvStrategy::logistic;
  o.q_max = q_max;
  return o;
}

void HazardModel::eval(const Eigen::Ref<const Eigen::RowVectorXd>& w, double* h) const {
  if (strategy == SurvStrategy::stratified) {
    auto it = strata.find(row_key(w));
    const std::vector<double>& src = it == strata.end() ? pooled : it->second;
    std::copy(src.begin(), src.end(), h);
    return;
  }
  std::vector<double> x(basis.dim());
  basis.expand_row(w, x.data());
  const double lin = basis.dim() ? Eigen::Map<const Eigen::VectorXd>(x.data(), x.size()).dot(fit.beta) : 0.0;
  for (int j = 0; j < K; ++j) {
    const double a = fit.alpha[j];
    h[j] = std::isfinite(a) ? expit(a + lin) : (a > 0 ? 1.0 : 0.0);
  }
}

void DiscreteSurvivalFit::evaluate(const Eigen::Ref<const Eigen::RowVectorXd>& w, std::vector<double>& hv,
                                   std::vector<double>& Sv, std::vector<double>& Hv) const {
  hv.resize(K);
  Sv.resize(K);
  Hv.resize(K);
  std::vector<double> hc(K);
  event.eval(w, hv.data());
  censor.eval(w, hc.data());
  double s = 1.0, g = 1.0;
  for (int j = 0; j < K; ++j) {
    Hv[j] = g;
    s *= 1.0 - hv[j];
    Sv[j] = s;
    g *= 1.0 - hc[j];
  }
}

namespace {

// Person-period rows for the event (censor = false) or censoring hazard.
// Events precede censorings within a bin: a subject censored at t_j is still
// at risk of an event at t_j, and a subject with an event at t_j is not at
// risk of censoring there.
void person_period(const SurvivalDataset& data, bool censor, std::vector<int>& subj, std::vector<int>& grp,
                   std::vector<double>& resp) {
  subj.clear();
  grp.clear();
  resp.clear();
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (int j = 1; j <= data.y[i]; ++j) {
      const bool last = j == data.y[i];
      if (censor && last && data.delta[i] == 1) continue;
      subj.push_back(static_cast<int>(i));
      grp.push_back(j - 1);
      resp.push_back(last ? (censor ? (data.delta[i] == 0) : (data.delta[i] == 1)) : 0.0);
    }
  }
}

HazardModel fit_hazard(const SurvivalDataset& data, bool censor, const SurvivalOptions& opt,
                       std::vector<std::string>& warnings) {
  const int K = data.K();
  const int k_need = opt.k_max > 0 ? std::min(opt.k_max, K) : K;
  std::vector<int> subj, grp;
  std::vector<double> resp;
  person_period(data, censor, subj, grp, resp);

  std::vector<double> d(K, 0.0), R(K, 0.0);
  for (std::size_t r = 0; r < grp.size(); ++r) {
    R[grp[r]] += 1.0;
    d[grp[r]] += resp[r];
  }
  if (!censor)
    for (int j = 0; j < k_need; ++j)
      if (R[j] == 0.0)
        throw data_error("EmptyRiskSet", kModule, "no subject at risk at grid index " + std::to_string(j + 1));

  HazardModel m;
  m.strategy = opt.strategy;
  m.K = K;
  m.pooled.assign(K, 0.0);
  for (int j = 0; j < K; ++j) m.pooled[j] = R[j] > 0 ? d[j] / R[j] : 0.0;

  if (opt.strategy == SurvStrategy::stratified) {
    const CellIndex cells = cell_index(data.w);
    std::vector<std::vector<double>> dc(cells.n_cells, std::vector<double>(K, 0.0)), Rc = dc;
    for (std::size_t r = 0; r < grp.size(); ++r) {
      Rc[cells.ids[subj[r]]][grp[r]] += 1.0;
      dc[cells.ids[subj[r]]][grp[r]] += resp[r];
    }
    bool borrowed = false;
    for (int c = 0; c < cells.n_cells; ++c) {
      std::vector<double> h(K);
      for (int j = 0; j < K; ++j) {
        if (Rc[c][j] > 0) {
          h[j] = dc[c][j] / Rc[c][j];
        } else {
          h[j] = m.pooled[j];
          borrowed = borrowed || (!censor && j < k_need);
        }
      }
      m.strata[row_key(data.w.row(cells.first_row[c]))] = std::move(h);
    }
    if (borrowed) warnings.push_back("some strata have an empty risk set; pooled hazard used there");
    return m;
  }

  const double n_subjects = static_cast<double>(data.n());
  const int q_hi = data.schema.has_continuous() ? std::max(opt.q_max, 1) : 1;
  double best = kInf;
  for (int q = 1; q <= q_hi; ++q) {
    Basis b = Basis::make(data.schema, data.w, {}, q, true);
    GroupedLogisticProblem prob;
    prob.n_groups = K;
    prob.group = grp;
    prob.r = resp;
    prob.X.resize(static_cast<Eigen::Index>(grp.size()), b.dim());
    const Eigen::MatrixXd Xs = b.expand(data.w);
    for (std::size_t r = 0; r < grp.size(); ++r) prob.X.row(r) = Xs.row(subj[r]);
    GroupedLogisticFit f;
    try {
      f = fit_grouped_logistic(prob);
    } catch (const Error&) {
      continue;
    }
    if (f.status == FitStatus::max_iter) continue;
    int n_free = 0;
    for (int j = 0; j < K; ++j) n_free += std::isfinite(f.alpha[j]) ? 1 : 0;
    const double bic = -2.0 * f.loglik + (n_free + b.dim()) * std::log(n_subjects);
    if (bic < best) {
      best = bic;
      m.basis = b;
      m.fit = f;
      m.degree = q;
    }
  }
  if (m.degree == 0)
    throw numerical_error("NonConvergence", kModule,
                          std::string(censor ? "censoring" : "event") + " hazard fit failed for every degree");
  if (m.fit.status == FitStatus::separation)
    warnings.push_back(std::string(censor ? "censoring" : "event") + " hazard fit shows separation");
  return m;
}

}  // namespace

DiscreteSurvivalFit fit_discrete_survival(const SurvivalDataset& data, const SurvivalOptions& opt) {
  data.validate();
  DiscreteSurvivalFit fit;
  fit.strategy = opt.strategy;
  fit.K = data.K();
  fit.event = fit_hazard(data, false, opt, fit.warnings);
  fit.censor = fit_hazard(data, true, opt, fit.warnings);
  const std::size_t n = data.n();
  fit.h.resize(n, fit.K);
  fit.S.resize(n, fit.K);
  fit.H.resize(n, fit.K);
  std::vector<double> hv, Sv, Hv;
  for (std::size_t i = 0; i < n; ++i) {
    fit.evaluate(data.w.row(i), hv, Sv, Hv);
    for (int j = 0; j < fit.K; ++j) {
      fit.h(i, j) = hv[j];
      fit.S(i, j) = Sv[j];
      fit.H(i, j) = Hv[j];
    }
  }
  return fit;
}

}  // namespace releff
