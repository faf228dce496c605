#include "releff/fully_observed.hpp"

#include <algorithm>
#include <cmath>

#include "releff/error.hpp"
#include "releff/numeric.hpp"

namespace releff {

namespace {

const char* kModule = "fully_observed_releff";

// P_n[x] under the dataset weights.
double pn(const std::vector<double>& x, const std::vector<double>& wt) { return weighted_mean(x, wt); }

// Variance of a target around fitted values: sigma2 = P_n[(t - r)^2] and
// base IF (t - r)^2 - sigma2.
VarianceBundle residual_bundle(const std::vector<double>& t, const std::vector<double>& r,
                               const std::vector<double>& wt, Kind kind, Estimand est) {
  VarianceBundle b;
  b.label = kind;
  b.estimand = est;
  b.wt = wt;
  std::vector<double> sq(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) sq[i] = (t[i] - r[i]) * (t[i] - r[i]);
  b.sigma2 = pn(sq, wt);
  b.if_values.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) b.if_values[i] = sq[i] - b.sigma2;
  return b;
}

std::vector<double> u_targets(const OrdinalDataset& data, const TransformU& u) {
  std::vector<double> t(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) t[i] = u.values[data.y[i] - 1];
  return t;
}

TransformU resolve_u(const OrdinalDataset& data, const TransformU* u) {
  TransformU out = u ? *u : TransformU::identity(data.K);
  out.validate(data.K);
  return out;
}

void check_lor_cdf(const Empirical& e, int K) {
  for (int k = 1; k < K; ++k)
    if (e.F[k - 1] <= 0.0 || e.F[k - 1] >= 1.0)
      throw data_error("BoundaryCDF", kModule, "empirical CDF at level " + std::to_string(k) + " is 0 or 1");
}

// Weights c_k (k = 1..K-1) of the bracket R = sum_k c_k (I{y<=k} - theta_k),
// and the per-observation derivative of each c_k along the empirical law.
struct Weights {
  std::vector<double> c;
  std::vector<std::vector<double>> dc;  // empty when constant
};

Weights bracket_weights(const OrdinalDataset& data, Estimand est, const Empirical& e, const TransformU* u) {
  const int K = data.K;
  const std::size_t n = data.n();
  Weights w;
  w.c.assign(K - 1, 0.0);
  if (est == Estimand::DIM) {
    w.c = resolve_u(data, u).b();
  } else if (est == Estimand::MW) {
    w.dc.assign(K - 1, std::vector<double>(n));
    for (int k = 1; k < K; ++k) {
      w.c[k - 1] = -(e.p[k - 1] + e.p[k]) / 2.0;
      for (std::size_t i = 0; i < n; ++i) {
        const int y = data.y[i];
        w.dc[k - 1][i] = -((y == k) - e.p[k - 1] + (y == k + 1) - e.p[k]) / 2.0;
      }
    }
  } else if (est == Estimand::LOR) {
    check_lor_cdf(e, K);
    w.dc.assign(K - 1, std::vector<double>(n));
    const double m = K - 1.0;
    for (int k = 1; k < K; ++k) {
      const double F = e.F[k - 1], v = F * (1.0 - F);
      w.c[k - 1] = 1.0 / (m * v);
      const double dv = -(1.0 - 2.0 * F) / (m * v * v);
      for (std::size_t i = 0; i < n; ++i) w.dc[k - 1][i] = dv * ((data.y[i] <= k) - F);
    }
  } else {
    throw config_error("BadEstimand", kModule, "ATE needs a continuous dataset");
  }
  return w;
}

// sigma2 = P_n[R^2] with the weight-derivative part of the IF included.
// theta(i, k-1) is the fitted conditional CDF; R and its per-level
// covariances are returned for callers that add model-fit corrections.
struct Bracket {
  VarianceBundle bundle;
  std::vector<double> R;
};

Bracket bracket_variance(const OrdinalDataset& data, const Weights& w, const Eigen::MatrixXd& theta, Kind kind,
                         Estimand est) {
  const int K = data.K;
  const std::size_t n = data.n();
  Bracket out;
  out.R.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (int k = 1; k < K; ++k) r += w.c[k - 1] * ((data.y[i] <= k) - theta(i, k - 1));
    out.R[i] = r;
  }
  std::vector<double> zero(n, 0.0);
  out.bundle = residual_bundle(out.R, zero, data.wt, kind, est);
  if (!w.dc.empty()) {
    std::vector<double> tmp(n);
    for (int k = 1; k < K; ++k) {
      for (std::size_t i = 0; i < n; ++i) tmp[i] = out.R[i] * ((data.y[i] <= k) - theta(i, k - 1));
      const double mk = pn(tmp, data.wt);
      for (std::size_t i = 0; i < n; ++i) out.bundle.if_values[i] += 2.0 * mk * w.dc[k - 1][i];
    }
  }
  return out;
}

Eigen::MatrixXd marginal_theta(const Empirical& e, std::size_t n, int K) {
  Eigen::MatrixXd th(n, K - 1);
  for (int k = 1; k < K; ++k) th.col(k - 1).setConstant(e.F[k - 1]);
  return th;
}

}  // namespace

std::string to_string(Estimand e) {
  switch (e) {
    case Estimand::ATE: return "ATE";
    case Estimand::DIM: return "DIM";
    case Estimand::MW: return "MW";
    case Estimand::LOR: return "LOR";
  }
  return "?";
}

std::string to_string(Kind k) {
  switch (k) {
    case Kind::unadjusted: return "unadjusted";
    case Kind::fully_adjusted: return "fully_adjusted";
    case Kind::working_model: return "working_model";
  }
  return "?";
}

Estimand parse_estimand(const std::string& s) {
  std::string t = s;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "ate") return Estimand::ATE;
  if (t == "dim") return Estimand::DIM;
  if (t == "mw") return Estimand::MW;
  if (t == "lor") return Estimand::LOR;
  throw config_error("BadEstimand", kModule, "unknown estimand '" + s + "'");
}

Kind parse_kind(const std::string& s) {
  if (s == "fully" || s == "fully_adjusted" || s == "F") return Kind::fully_adjusted;
  if (s == "working" || s == "working_model" || s == "W" || s == "P") return Kind::working_model;
  if (s == "unadjusted") return Kind::unadjusted;
  throw config_error("BadKind", kModule, "unknown kind '" + s + "'");
}

TransformU TransformU::identity(int K) {
  TransformU u;
  for (int k = 1; k <= K; ++k) u.values.push_back(k);
  return u;
}

std::vector<double> TransformU::b() const {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < values.size(); ++k) out.push_back(values[k] - values[k + 1]);
  return out;
}

void TransformU::validate(int K) const {
  if (static_cast<int>(values.size()) != K)
    throw config_error("BadTransform", kModule, "u must have one value per outcome level");
  bool up = true, down = true;
  for (std::size_t k = 0; k + 1 < values.size(); ++k) {
    up = up && values[k] <= values[k + 1];
    down = down && values[k] >= values[k + 1];
  }
  if (!up && !down) throw config_error("BadTransform", kModule, "u must be monotone");
}

VarianceBundle unadjusted_variance(const OrdinalDataset& data, Estimand est, const TransformU* u) {
  data.validate();
  const Empirical e = empirical_summary(data);
  const std::size_t n = data.n();
  const int K = data.K;
  VarianceBundle b;
  if (est == Estimand::DIM) {
    const std::vector<double> t = u_targets(data, resolve_u(data, u));
    const double m = pn(t, data.wt);
    b = residual_bundle(t, std::vector<double>(n, m), data.wt, Kind::unadjusted, est);
  } else if (est == Estimand::MW) {
    double s3 = 0.0;
    for (double p : e.p) s3 += p * p * p;
    b.label = Kind::unadjusted;
    b.estimand = est;
    b.wt = data.wt;
    b.sigma2 = (1.0 - s3) / 12.0;
    b.if_values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (int k = 1; k <= K; ++k) v -= e.p[k - 1] * e.p[k - 1] * ((data.y[i] == k) - e.p[k - 1]) / 4.0;
      b.if_values[i] = v;
    }
  } else if (est == Estimand::LOR) {
    const Weights w = bracket_weights(data, est, e, u);
    b = bracket_variance(data, w, marginal_theta(e, n, K), Kind::unadjusted, est).bundle;
  } else {
    throw config_error("BadEstimand", kModule, "ATE needs a continuous dataset");
  }
  if (!(b.sigma2 > 0.0)) throw data_error("DegenerateOutcome", kModule, "unadjusted variance is zero");
  return b;
}

VarianceBundle unadjusted_variance(const ContinuousDataset& data) {
  data.validate();
  const double m = pn(data.y, data.wt);
  VarianceBundle b =
      residual_bundle(data.y, std::vector<double>(data.n(), m), data.wt, Kind::unadjusted, Estimand::ATE);
  if (!(b.sigma2 > 0.0)) throw data_error("DegenerateOutcome", kModule, "unadjusted variance is zero");
  return b;
}

VarianceBundle fully_adjusted_variance(const OrdinalDataset& data, Estimand est, const NuisanceOptions& opt,
                                       const TransformU* u) {
  data.validate();
  const Empirical e = empirical_summary(data);
  const std::size_t n = data.n();
  const int K = data.K;
  if (est == Estimand::LOR) {
    const Weights w = bracket_weights(data, est, e, u);
    const ConditionalCdf cdf = fit_conditional_cdf(data, opt);
    return bracket_variance(data, w, cdf.theta, Kind::fully_adjusted, est).bundle;
  }
  if (est != Estimand::DIM && est != Estimand::MW)
    throw config_error("BadEstimand", kModule, "ATE needs a continuous dataset");

  std::vector<double> t(n);
  if (est == Estimand::DIM) {
    t = u_targets(data, resolve_u(data, u));
  } else {
    for (std::size_t i = 0; i < n; ++i) t[i] = e.eta[data.y[i] - 1];
  }
  const ConditionalMeanModel m = ConditionalMeanModel::fit(t, data.schema, data.w, data.wt, opt);
  VarianceBundle b = residual_bundle(t, m.fitted(), data.wt, Kind::fully_adjusted, est);
  if (est == Estimand::MW) {
    // eta itself moves with the data: d eta(m) = h(y, m) - eta(m) with
    // h(y, m) = I{y < m} + I{y = m}/2, contributing 2 P_n[(t - r) h(y, Y~)] - 2 sigma2.
    std::vector<double> el(K, 0.0), tmp(n);
    for (int l = 1; l <= K; ++l) {
      for (std::size_t i = 0; i < n; ++i) tmp[i] = (data.y[i] == l) ? t[i] - m.fitted()[i] : 0.0;
      el[l - 1] = pn(tmp, data.wt);
    }
    std::vector<double> A(K, 0.0);
    for (int y = 1; y <= K; ++y) {
      double s = el[y - 1] / 2.0;
      for (int l = y + 1; l <= K; ++l) s += el[l - 1];
      A[y - 1] = s;
    }
    for (std::size_t i = 0; i < n; ++i) b.if_values[i] += 2.0 * A[data.y[i] - 1] - 2.0 * b.sigma2;
  }
  return b;
}

VarianceBundle fully_adjusted_variance(const ContinuousDataset& data, const NuisanceOptions& opt) {
  data.validate();
  const ConditionalMeanModel m = ConditionalMeanModel::fit(data.y, data.schema, data.w, data.wt, opt);
  return residual_bundle(data.y, m.fitted(), data.wt, Kind::fully_adjusted, Estimand::ATE);
}

VarianceBundle working_model_variance(const OrdinalDataset& data, Estimand est, const WorkingModelFit& fit,
                                      const TransformU* u) {
  data.validate();
  if (!fit.converged) throw numerical_error("NonConvergedFit", kModule, "proportional-odds fit did not converge");
  if (fit.K() != data.K) throw config_error("ShapeMismatch", kModule, "fit and data disagree on K");
  const Empirical e = empirical_summary(data);
  const std::size_t n = data.n();
  const int K = data.K;
  const Eigen::MatrixXd X = working_design(data.schema, data.w);
  const int p = static_cast<int>(X.cols());
  Eigen::MatrixXd theta(n, K - 1);
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 1; k < K; ++k) theta(i, k - 1) = fit.theta(k, X.row(i));

  const Weights w = bracket_weights(data, est, e, u);
  Bracket br = bracket_variance(data, w, theta, Kind::working_model, est);
  VarianceBundle& b = br.bundle;
  b.warnings = fit.warnings;

  // Coefficient correction: grad_{alpha,beta} P_n[R^2] . J^{-1} U_i with J the
  // information of the pooled binary loss and U_i the per-row score.
  std::vector<int> free_k;
  for (int k = 1; k < K; ++k)
    if (std::isfinite(fit.alpha[k - 1])) free_k.push_back(k);
  const int nf = static_cast<int>(free_k.size());
  if (nf == 0) return b;
  const int P = nf + p;
  const double N = data.total_weight();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(P, P);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(P);
  Eigen::MatrixXd U(n, P);
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = wt_at(data.wt, i) / N;
    const auto x = X.row(i);
    double vsum = 0.0, cvsum = 0.0, ressum = 0.0;
    for (int f = 0; f < nf; ++f) {
      const int k = free_k[f];
      const double th = theta(i, k - 1);
      const double v = th * (1.0 - th);
      const double res = (data.y[i] <= k) - th;
      J(f, f) += wi * v;
      if (p) J.block(f, nf, 1, p) += wi * v * x;
      grad[f] += -2.0 * wi * br.R[i] * w.c[k - 1] * v;
      U(i, f) = res;
      vsum += v;
      cvsum += w.c[k - 1] * v;
      ressum += res;
    }
    if (p) {
      J.block(nf, nf, p, p) += wi * vsum * x.transpose() * x;
      grad.tail(p) += -2.0 * wi * br.R[i] * cvsum * x.transpose();
      U.row(i).tail(p) = ressum * x;
    }
  }
  if (p) J.block(nf, 0, p, nf) = J.block(0, nf, nf, p).transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(J);
  if (ldlt.info() != Eigen::Success)
    throw numerical_error("SingularDesign", kModule, "working-model information matrix is singular");
  const Eigen::VectorXd v = ldlt.solve(grad);
  for (std::size_t i = 0; i < n; ++i) b.if_values[i] += U.row(i).dot(v);
  return b;
}

VarianceBundle working_model_variance(const ContinuousDataset& data, const LinearFit& fit) {
  data.validate();
  const Eigen::MatrixXd X = working_design(data.schema, data.w);
  std::vector<double> r(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) r[i] = fit.predict(X.row(i));
  // The coefficient correction vanishes by the normal equations.
  return residual_bundle(data.y, r, data.wt, Kind::working_model, Estimand::ATE);
}

RelEffEstimate releff(const VarianceBundle& num, const VarianceBundle& den) {
  if (num.if_values.size() != den.if_values.size())
    throw config_error("ShapeMismatch", kModule, "variance bundles come from different samples");
  if (!(den.sigma2 > 0.0)) throw data_error("DegenerateOutcome", kModule, "unadjusted variance is zero");
  RelEffEstimate r;
  r.kind = num.label;
  r.estimand = num.estimand;
  r.sigma2_num = num.sigma2;
  r.sigma2_den = den.sigma2;
  r.phi = num.sigma2 / den.sigma2;
  r.wt = den.wt;
  r.if_values.resize(num.if_values.size());
  for (std::size_t i = 0; i < r.if_values.size(); ++i)
    r.if_values[i] = (num.if_values[i] - r.phi * den.if_values[i]) / den.sigma2;
  r.se = weighted_se(r.if_values, r.wt);
  r.n = weight_total(r.wt, r.if_values.size());
  r.warnings = num.warnings;
  r.warnings.insert(r.warnings.end(), den.warnings.begin(), den.warnings.end());
  return r;
}

RelEffEstimate estimate_releff(const OrdinalDataset& data, Estimand est, Kind kind, const NuisanceOptions& opt,
                               const TransformU* u) {
  const VarianceBundle den = unadjusted_variance(data, est, u);
  if (kind == Kind::fully_adjusted) return releff(fully_adjusted_variance(data, est, opt, u), den);
  if (kind == Kind::working_model) {
    const WorkingModelFit fit = fit_proportional_odds(data);
    return releff(working_model_variance(data, est, fit, u), den);
  }
  throw config_error("BadKind", kModule, "relative efficiency needs an adjusted kind");
}

RelEffEstimate estimate_releff(const ContinuousDataset& data, Kind kind, const NuisanceOptions& opt) {
  const VarianceBundle den = unadjusted_variance(data);
  if (kind == Kind::fully_adjusted) return releff(fully_adjusted_variance(data, opt), den);
  if (kind == Kind::working_model) return releff(working_model_variance(data, fit_ols(data)), den);
  throw config_error("BadKind", kModule, "relative efficiency needs an adjusted kind");
}

}  // namespace releff
