#include "releff/survival.hpp"

#include <algorithm>
#include <cmath>

#include "releff/error.hpp"
#include "releff/numeric.hpp"

namespace releff {

namespace {

const char* kModule = "survival_releff";

inline double inv_floor(double s, long* floored) {
  if (s < kSurvFloor) {
    if (floored) ++*floored;
    return 1.0 / kSurvFloor;
  }
  return 1.0 / s;
}

// 1/S_j for j = 0..k with S_0 = 1, floored.
void inverse_survivor(const double* S, int k, std::vector<double>& iS, long* floored) {
  iS.resize(k + 1);
  iS[0] = 1.0;
  for (int j = 1; j <= k; ++j) iS[j] = inv_floor(S[j - 1], floored);
}

void check_k(int k, int K) {
  if (k < 1 || k > K) throw config_error("BadTime", kModule, "time index " + std::to_string(k) + " is off the grid");
}

void check_G(const Eigen::MatrixXd& G, int k) {
  for (Eigen::Index i = 0; i < G.rows(); ++i)
    for (int j = 0; j < k; ++j)
      if (!(G(i, j) > 0.0))
        throw numerical_error("ZeroDenominator", kModule,
                              "trial censoring survivor is not positive at (j = " + std::to_string(j + 1) +
                                  ", i = " + std::to_string(i + 1) + ")");
}

VarianceBundle centered_bundle(const std::vector<double>& summand, Kind kind) {
  VarianceBundle b;
  b.label = kind;
  b.estimand = Estimand::DIM;
  b.sigma2 = pairwise_sum(summand) / static_cast<double>(summand.size());
  b.if_values.resize(summand.size());
  for (std::size_t i = 0; i < summand.size(); ++i) b.if_values[i] = summand[i] - b.sigma2;
  return b;
}

template <class F>
void for_each_row(std::size_t n, Exec exec, F&& f) {
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) f(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) f(i);
  }
}

struct RowBuffers {
  std::vector<double> S, tau, G;
};

}  // namespace

std::string stratum_key(const CovariateSchema& schema, const Eigen::Ref<const Eigen::RowVectorXd>& w) {
  std::string key;
  for (std::size_t c = 0; c < schema.d(); ++c) {
    const auto& cov = schema.columns[c];
    if (cov.kind != CovKind::discrete) continue;
    if (!key.empty()) key += '|';
    key += cov.levels.at(static_cast<std::size_t>(w[c]));
  }
  return key;
}

std::string to_string(const SurvEstimand& e) {
  const char* t = e.type == SurvEstimand::Type::RD ? "RD" : e.type == SurvEstimand::Type::RR ? "RR" : "RMST";
  return std::string(t) + "@" + std::to_string(e.k);
}

Eigen::MatrixXd TrialCensoringSpec::tabulate(const SurvivalDataset& data) const {
  const int K = data.K();
  const auto n = static_cast<Eigen::Index>(data.n());
  Eigen::MatrixXd G(n, K);
  auto check_row = [&](const std::vector<double>& g, const std::string& what) {
    if (static_cast<int>(g.size()) < K)
      throw config_error("BadCensoring", kModule, what + " has fewer than K = " + std::to_string(K) + " values");
  };
  switch (type) {
    case Type::marginal:
      check_row(marginal, "marginal censoring survivor");
      for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < K; ++j) G(i, j) = marginal[j];
      break;
    case Type::strata:
      for (const auto& [k, g] : strata) check_row(g, "stratum '" + k + "'");
      for (Eigen::Index i = 0; i < n; ++i) {
        const std::string key = stratum_key(data.schema, data.w.row(i));
        auto it = strata.find(key);
        if (it == strata.end())
          throw config_error("BadCensoring", kModule, "no censoring survivor for stratum '" + key + "'");
        for (int j = 0; j < K; ++j) G(i, j) = it->second[j];
      }
      break;
    case Type::exp_rate:
      if (!(rate >= 0.0)) throw config_error("BadCensoring", kModule, "exp_rate must be >= 0");
      for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < K; ++j) G(i, j) = std::exp(-rate * data.grid[j]);
      break;
    case Type::function:
      if (!fn) throw config_error("BadCensoring", kModule, "censoring function is empty");
      for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < K; ++j) G(i, j) = fn(j + 1, data.grid[j], data.w.row(i));
      break;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < K; ++j)
      if (!(G(i, j) > 0.0 && G(i, j) <= 1.0))
        throw config_error("BadCensoring", kModule, "censoring survivor must lie in (0, 1]");
  return G;
}

Eigen::MatrixXd tau_matrix(const SurvivalDataset& data, const DiscreteSurvivalFit& fit, int k, long* floored) {
  check_k(k, data.K());
  const std::size_t n = data.n();
  Eigen::MatrixXd tau(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int l = 1; l <= k; ++l) {
      const int y = data.y[i];
      const double M = ((y == l && data.delta[i] == 1) ? 1.0 : 0.0) - fit.h(i, l - 1) * (y >= l ? 1.0 : 0.0);
      if (M != 0.0) acc -= M * inv_floor(fit.S(i, l - 1), floored) * inv_floor(fit.H(i, l - 1), floored);
      tau(i, l - 1) = fit.S(i, l - 1) * acc;
    }
  }
  return tau;
}

MarginalSurvival marginal_survival_onestep(const SurvivalDataset& data, const DiscreteSurvivalFit& fit, int k) {
  const Eigen::MatrixXd tau = tau_matrix(data, fit, k);
  const std::size_t n = data.n();
  MarginalSurvival ms;
  ms.S.resize(k);
  ms.IF.resize(n, k);
  std::vector<double> col(n);
  for (int m = 0; m < k; ++m) {
    for (std::size_t i = 0; i < n; ++i) col[i] = tau(i, m) + fit.S(i, m);
    ms.S[m] = pairwise_sum(col) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) ms.IF(i, m) = col[i] - ms.S[m];
  }
  return ms;
}

std::vector<double> contrast_weights(const SurvEstimand& e) {
  std::vector<double> a(e.k, 0.0);
  if (e.type == SurvEstimand::Type::RMST)
    std::fill(a.begin(), a.end(), 1.0);
  else
    a[e.k - 1] = 1.0;
  return a;
}

double survivor_variance(const std::vector<double>& S, const std::vector<double>& G, const std::vector<double>& a) {
  const int k = static_cast<int>(a.size());
  double q = 0.0, out = 0.0;
  for (int u = k; u >= 1; --u) {
    q += a[u - 1] * S[u - 1];
    const double prev = u == 1 ? 1.0 : S[u - 2];
    out += (1.0 / S[u - 1] - 1.0 / prev) * q * q / G[u - 1];
  }
  return out;
}

SurvivalBundle unadjusted_variance_survival(const MarginalSurvival& ms, const std::vector<double>& gbar,
                                            const SurvEstimand& e, const Eigen::MatrixXd* gcond) {
  const int k = e.k;
  if (static_cast<int>(ms.S.size()) < k) throw config_error("BadTime", kModule, "marginal survivor too short");
  const double Sk = ms.S[k - 1];
  if (!(Sk > 0.0 && Sk < 1.0))
    throw data_error("DegenerateSurvival", kModule, "estimated S(t_k) is " + std::to_string(Sk));
  SurvivalBundle out;
  std::vector<double> S(ms.S.begin(), ms.S.begin() + k);
  for (double& s : S)
    if (s < kSurvFloor) {
      s = kSurvFloor;
      ++out.floored;
    }
  const std::vector<double> a = contrast_weights(e);
  std::vector<double> Q(k + 2, 0.0), D(k + 1, 0.0);
  for (int u = k; u >= 1; --u) Q[u] = Q[u + 1] + a[u - 1] * S[u - 1];
  for (int u = 1; u <= k; ++u) D[u] = 1.0 / S[u - 1] - 1.0 / (u == 1 ? 1.0 : S[u - 2]);

  VarianceBundle& b = out.bundle;
  b.label = Kind::unadjusted;
  b.sigma2 = 0.0;
  for (int u = 1; u <= k; ++u) b.sigma2 += D[u] * Q[u] * Q[u] / gbar[u - 1];

  // Delta method through S(t_1..t_k): gradient of the plug-in.
  std::vector<double> grad(k + 1, 0.0);
  double run = 0.0;  // sum_{u<=m} 2 D_u Q_u / G_u
  for (int m = 1; m <= k; ++m) {
    run += 2.0 * D[m] * Q[m] / gbar[m - 1];
    const double s2 = S[m - 1] * S[m - 1];
    double g = -Q[m] * Q[m] / (gbar[m - 1] * s2) + a[m - 1] * run;
    if (m < k) g += Q[m + 1] * Q[m + 1] / (gbar[m] * s2);
    grad[m] = g;
  }
  const auto n = static_cast<std::size_t>(ms.IF.rows());
  b.if_values.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    for (int m = 1; m <= k; ++m) v += grad[m] * ms.IF(i, m - 1);
    if (gcond) {
      for (int u = 1; u <= k; ++u)
        v -= D[u] * Q[u] * Q[u] / (gbar[u - 1] * gbar[u - 1]) * ((*gcond)(i, u - 1) - gbar[u - 1]);
    }
    b.if_values[i] = v;
  }
  return out;
}

double rd_summand(const double* S, const double* tau, const double* G, int k, long* floored) {
  std::vector<double> iS;
  inverse_survivor(S, k, iS, floored);
  const double Sk = S[k - 1], tk = tau[k - 1];
  double out = 0.0;
  for (int j = 1; j <= k; ++j) {
    const double tj = tau[j - 1], tjm = j > 1 ? tau[j - 2] : 0.0;
    const double g = 2.0 * (Sk * iS[j] - Sk * iS[j - 1]) * tk - Sk * Sk * iS[j] * iS[j] * tj +
                     Sk * Sk * iS[j - 1] * iS[j - 1] * tjm;
    const double f = Sk * Sk * (iS[j] - iS[j - 1]);
    out += (g + f) / G[j - 1];
  }
  return out;
}

double rmst_summand_naive(const double* S, const double* tau, const double* G, int k, long* floored) {
  std::vector<double> iS;
  inverse_survivor(S, k, iS, floored);
  auto t = [&](int j) { return j == 0 ? 0.0 : tau[j - 1]; };
  double out = 0.0;
  for (int j = 1; j <= k; ++j)
    for (int l = 1; l <= k; ++l)
      for (int u = 1; u <= std::min(j, l); ++u) {
        const double Sj = S[j - 1], Sl = S[l - 1];
        const double g = (Sj * iS[u] - Sj * iS[u - 1]) * t(l) + (Sl * iS[u] - Sl * iS[u - 1]) * t(j) -
                         Sj * Sl * iS[u] * iS[u] * t(u) + Sj * Sl * iS[u - 1] * iS[u - 1] * t(u - 1);
        const double f = Sj * Sl * (iS[u] - iS[u - 1]);
        out += (g + f) / G[u - 1];
      }
  return out;
}

double rmst_summand_fast(const double* S, const double* tau, const double* G, const double* a, int k,
                         long* floored) {
  std::vector<double> iS;
  inverse_survivor(S, k, iS, floored);
  double qs = 0.0, qt = 0.0, out = 0.0;
  for (int u = k; u >= 1; --u) {
    qs += a[u - 1] * S[u - 1];
    qt += a[u - 1] * tau[u - 1];
    const double D = iS[u] - iS[u - 1];
    const double tprev = u > 1 ? tau[u - 2] : 0.0;
    const double q2 = qs * qs;
    out += (D * q2 + 2.0 * D * qs * qt - tau[u - 1] * iS[u] * iS[u] * q2 + tprev * iS[u - 1] * iS[u - 1] * q2) /
           G[u - 1];
  }
  return out;
}

SurvivalBundle adjusted_variance_rd(const SurvivalDataset& data, const DiscreteSurvivalFit& fit,
                                    const Eigen::MatrixXd& G, int k, Exec exec) {
  check_k(k, data.K());
  check_G(G, k);
  SurvivalBundle out;
  const Eigen::MatrixXd tau = tau_matrix(data, fit, k, &out.floored);
  const std::size_t n = data.n();
  std::vector<double> summand(n);
  std::vector<long> fl(n, 0);
  for_each_row(n, exec, [&](std::size_t i) {
    RowBuffers r;
    r.S.resize(k);
    r.tau.resize(k);
    r.G.resize(k);
    for (int j = 0; j < k; ++j) {
      r.S[j] = fit.S(i, j);
      r.tau[j] = tau(i, j);
      r.G[j] = G(i, j);
    }
    summand[i] = rd_summand(r.S.data(), r.tau.data(), r.G.data(), k, &fl[i]);
  });
  for (long f : fl) out.floored += f;
  out.bundle = centered_bundle(summand, Kind::fully_adjusted);
  return out;
}

SurvivalBundle adjusted_variance_rmst(const SurvivalDataset& data, const DiscreteSurvivalFit& fit,
                                      const Eigen::MatrixXd& G, int k, RmstAlgorithm alg, Exec exec) {
  check_k(k, data.K());
  check_G(G, k);
  SurvivalBundle out;
  const Eigen::MatrixXd tau = tau_matrix(data, fit, k, &out.floored);
  const std::size_t n = data.n();
  const std::vector<double> a(k, 1.0);
  std::vector<double> summand(n);
  std::vector<long> fl(n, 0);
  for_each_row(n, exec, [&](std::size_t i) {
    RowBuffers r;
    r.S.resize(k);
    r.tau.resize(k);
    r.G.resize(k);
    for (int j = 0; j < k; ++j) {
      r.S[j] = fit.S(i, j);
      r.tau[j] = tau(i, j);
      r.G[j] = G(i, j);
    }
    summand[i] = alg == RmstAlgorithm::fast ? rmst_summand_fast(r.S.data(), r.tau.data(), r.G.data(), a.data(), k, &fl[i])
                                            : rmst_summand_naive(r.S.data(), r.tau.data(), r.G.data(), k, &fl[i]);
  });
  for (long f : fl) out.floored += f;
  out.bundle = centered_bundle(summand, Kind::fully_adjusted);
  return out;
}

SurvivalBundle survival_unadjusted_bundle(const SurvivalDataset& data, const DiscreteSurvivalFit& fit,
                                          const TrialCensoringSpec& Gspec, const SurvEstimand& e) {
  check_k(e.k, data.K());
  const Eigen::MatrixXd G = Gspec.tabulate(data);
  std::vector<double> gbar(e.k);
  for (int j = 0; j < e.k; ++j) gbar[j] = G.col(j).mean();
  const MarginalSurvival ms = marginal_survival_onestep(data, fit, e.k);
  return unadjusted_variance_survival(ms, gbar, e, Gspec.conditional() ? &G : nullptr);
}

SurvivalBundle survival_adjusted_bundle(const SurvivalDataset& data, const DiscreteSurvivalFit& fit,
                                        const TrialCensoringSpec& Gspec, const SurvEstimand& e, Exec exec) {
  check_k(e.k, data.K());
  const Eigen::MatrixXd G = Gspec.tabulate(data);
  SurvivalBundle num = e.type == SurvEstimand::Type::RMST
                           ? adjusted_variance_rmst(data, fit, G, e.k, RmstAlgorithm::fast, exec)
                           : adjusted_variance_rd(data, fit, G, e.k, exec);
  num.bundle.warnings = fit.warnings;
  return num;
}

SurvivalReleff releff_survival(const SurvivalDataset& data, const DiscreteSurvivalFit& fit,
                               const TrialCensoringSpec& Gspec, const SurvEstimand& e, Exec exec) {
  SurvivalBundle den = survival_unadjusted_bundle(data, fit, Gspec, e);
  SurvivalBundle num = survival_adjusted_bundle(data, fit, Gspec, e, exec);
  SurvivalReleff out;
  out.est = releff(num.bundle, den.bundle);
  out.floored = num.floored + den.floored;
  if (out.floored > 0)
    out.est.warnings.push_back(std::to_string(out.floored) + " survivor/censoring denominators floored at 0.01");
  return out;
}

}  // namespace releff
