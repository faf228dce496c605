#include "releff/trial.hpp"

#include <cmath>

#include "releff/error.hpp"
#include "releff/nuisance.hpp"
#include "releff/numeric.hpp"

namespace releff {

namespace {

const char* kModule = "trial_estimators";

// Arm-specific level frequencies p[a][k-1].
std::vector<std::vector<double>> arm_frequencies(const TrialDataset& t) {
  std::vector<std::vector<double>> p(2, std::vector<double>(t.K, 0.0));
  std::vector<double> tot(2, 0.0);
  for (std::size_t i = 0; i < t.n(); ++i) {
    const double w = wt_at(t.wt, i);
    p[t.a[i]][static_cast<int>(t.y[i]) - 1] += w;
    tot[t.a[i]] += w;
  }
  for (int a = 0; a < 2; ++a)
    for (auto& v : p[a]) v /= tot[a];
  return p;
}

std::vector<double> cdf(const std::vector<double>& p) {
  std::vector<double> F(p.size());
  double c = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) F[k] = (c += p[k]);
  F.back() = 1.0;
  return F;
}

double mw_from(const std::vector<double>& p1, const std::vector<double>& p0) {
  double s = 0.0;
  for (std::size_t x = 0; x < p1.size(); ++x)
    for (std::size_t y = 0; y < p0.size(); ++y) s += p1[x] * p0[y] * (x > y ? 1.0 : x == y ? 0.5 : 0.0);
  return s;
}

double lor_from(const std::vector<double>& F1, const std::vector<double>& F0) {
  const std::size_t K = F1.size();
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    if (F1[k] <= 0.0 || F1[k] >= 1.0 || F0[k] <= 0.0 || F0[k] >= 1.0)
      throw data_error("BoundaryCDF", kModule, "arm CDF at level " + std::to_string(k + 1) + " is 0 or 1");
    s += logit(F1[k]) - logit(F0[k]);
  }
  return s / static_cast<double>(K - 1);
}

double dim_from(const std::vector<double>& F1, const std::vector<double>& F0, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) s += b[k] * (F1[k] - F0[k]);
  return s;
}

void require_ordinal(const TrialDataset& t, Estimand e) {
  if (t.K < 2) throw config_error("BadEstimand", kModule, to_string(e) + " needs an ordinal trial");
}

}  // namespace

TrialEstimate dim_unadjusted(const TrialDataset& trial, const TransformU* u) {
  validate_trial(trial);
  TrialEstimate r;
  r.estimand = trial.K == 0 ? Estimand::ATE : Estimand::DIM;
  std::vector<double> s(2, 0.0), tot(2, 0.0);
  TransformU uu;
  if (trial.K > 0) {
    uu = u ? *u : TransformU::identity(trial.K);
    uu.validate(trial.K);
  }
  for (std::size_t i = 0; i < trial.n(); ++i) {
    const double w = wt_at(trial.wt, i);
    const double v = trial.K == 0 ? trial.y[i] : uu.values[static_cast<int>(trial.y[i]) - 1];
    s[trial.a[i]] += w * v;
    tot[trial.a[i]] += w;
  }
  r.psi = s[1] / tot[1] - s[0] / tot[0];
  return r;
}

TrialEstimate mw_unadjusted(const TrialDataset& trial) {
  validate_trial(trial);
  require_ordinal(trial, Estimand::MW);
  const auto p = arm_frequencies(trial);
  return {mw_from(p[1], p[0]), Estimand::MW, Kind::unadjusted};
}

TrialEstimate lor_unadjusted(const TrialDataset& trial) {
  validate_trial(trial);
  require_ordinal(trial, Estimand::LOR);
  const auto p = arm_frequencies(trial);
  return {lor_from(cdf(p[1]), cdf(p[0])), Estimand::LOR, Kind::unadjusted};
}

TrialEstimate unadjusted_estimate(const TrialDataset& trial, Estimand est, const TransformU* u) {
  switch (est) {
    case Estimand::ATE:
    case Estimand::DIM: return dim_unadjusted(trial, u);
    case Estimand::MW: return mw_unadjusted(trial);
    case Estimand::LOR: return lor_unadjusted(trial);
  }
  throw config_error("BadEstimand", kModule, "unknown estimand");
}

std::vector<TrialEstimate> working_model_estimates(const TrialDataset& trial, const std::vector<Estimand>& ests,
                                                   const TransformU* u) {
  validate_trial(trial);
  const Eigen::MatrixXd X = working_design(trial.schema, trial.w);
  const double N = weight_total(trial.wt, trial.n());
  Eigen::VectorXd wbar = Eigen::VectorXd::Zero(X.cols());
  for (std::size_t i = 0; i < trial.n(); ++i) wbar += wt_at(trial.wt, i) * X.row(i).transpose();
  wbar /= N;

  std::vector<std::vector<std::size_t>> rows(2);
  for (std::size_t i = 0; i < trial.n(); ++i) rows[trial.a[i]].push_back(i);
  auto arm_X = [&](int a) {
    Eigen::MatrixXd Xa(rows[a].size(), X.cols());
    for (std::size_t r = 0; r < rows[a].size(); ++r) Xa.row(r) = X.row(rows[a][r]);
    return Xa;
  };
  auto arm_wt = [&](int a) {
    std::vector<double> w(rows[a].size());
    for (std::size_t r = 0; r < rows[a].size(); ++r) w[r] = wt_at(trial.wt, rows[a][r]);
    return w;
  };

  std::vector<TrialEstimate> out;
  if (trial.K == 0) {
    LinearFit f[2];
    for (int a = 0; a < 2; ++a) {
      std::vector<double> ya(rows[a].size());
      for (std::size_t r = 0; r < rows[a].size(); ++r) ya[r] = trial.y[rows[a][r]];
      f[a] = fit_ols(arm_X(a), ya, arm_wt(a));
    }
    const double psi = f[1].alpha - f[0].alpha + (f[1].beta - f[0].beta).dot(wbar);
    for (Estimand e : ests) {
      if (e != Estimand::ATE && e != Estimand::DIM)
        throw config_error("BadEstimand", kModule, to_string(e) + " needs an ordinal trial");
      out.push_back({psi, Estimand::ATE, Kind::working_model});
    }
    return out;
  }

  const int K = trial.K;
  std::vector<std::vector<double>> F(2, std::vector<double>(K, 1.0));
  for (int a = 0; a < 2; ++a) {
    std::vector<int> ya(rows[a].size());
    for (std::size_t r = 0; r < rows[a].size(); ++r) ya[r] = static_cast<int>(trial.y[rows[a][r]]);
    const WorkingModelFit fit = fit_proportional_odds(ya, K, arm_X(a), arm_wt(a));
    if (!fit.converged)
      throw numerical_error("NonConvergedFit", kModule, "arm " + std::to_string(a) + " working-model fit failed");
    for (int k = 1; k < K; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < trial.n(); ++i) s += wt_at(trial.wt, i) * fit.theta(k, X.row(i));
      F[a][k - 1] = s / N;
    }
  }
  for (Estimand e : ests) {
    TrialEstimate r{0.0, e, Kind::working_model};
    if (e == Estimand::DIM) {
      TransformU uu = u ? *u : TransformU::identity(K);
      uu.validate(K);
      r.psi = dim_from(F[1], F[0], uu.b());
    } else if (e == Estimand::MW) {
      std::vector<double> p1(K), p0(K);
      for (int k = 0; k < K; ++k) {
        p1[k] = F[1][k] - (k ? F[1][k - 1] : 0.0);
        p0[k] = F[0][k] - (k ? F[0][k - 1] : 0.0);
      }
      r.psi = mw_from(p1, p0);
    } else if (e == Estimand::LOR) {
      r.psi = lor_from(F[1], F[0]);
    } else {
      throw config_error("BadEstimand", kModule, "ATE needs a continuous trial");
    }
    out.push_back(r);
  }
  return out;
}

TrialEstimate working_model_estimate(const TrialDataset& trial, Estimand est, const TransformU* u) {
  return working_model_estimates(trial, {est}, u).front();
}

}  // namespace releff
