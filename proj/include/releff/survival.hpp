#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "releff/data.hpp"
#include "releff/fully_observed.hpp"
#include "releff/nuisance.hpp"
#include "releff/parallel.hpp"

namespace releff {

// Censoring survivor G(t_j, w) = P(C >= t_j | W = w) of the planned trial.
struct TrialCensoringSpec {
  enum class Type { marginal, strata, exp_rate, function } type = Type::marginal;
  std::vector<double> marginal;
  std::map<std::string, std::vector<double>> strata;  // key: discrete levels joined by '|'
  double rate = 0.0;
  std::function<double(int j, double t, const Eigen::Ref<const Eigen::RowVectorXd>& w)> fn;

  static TrialCensoringSpec exponential(double rate) {
    TrialCensoringSpec g;
    g.type = Type::exp_rate;
    g.rate = rate;
    return g;
  }

  bool conditional() const { return type == Type::strata || type == Type::function; }
  // n x K table of G(t_j, W_i).
  Eigen::MatrixXd tabulate(const SurvivalDataset& data) const;
};

std::string stratum_key(const CovariateSchema& schema, const Eigen::Ref<const Eigen::RowVectorXd>& w);

struct SurvEstimand {
  enum class Type { RD, RR, RMST } type = Type::RD;
  int k = 1;  // grid index of the time of interest
};
std::string to_string(const SurvEstimand& e);

// Lower bound applied to S and H wherever they appear in a denominator.
inline constexpr double kSurvFloor = 0.01;

struct SurvivalBundle {
  VarianceBundle bundle;
  long floored = 0;  // denominator terms raised to kSurvFloor
};

// tau_l(Y_i, Delta_i, W_i) for l = 1..k as an n x k matrix.
Eigen::MatrixXd tau_matrix(const SurvivalDataset& data, const DiscreteSurvivalFit& fit, int k, long* floored = nullptr);

struct MarginalSurvival {
  std::vector<double> S;  // S(t_1..t_k)
  Eigen::MatrixXd IF;     // n x k
};
MarginalSurvival marginal_survival_onestep(const SurvivalDataset& data, const DiscreteSurvivalFit& fit, int k);

// Weights a_j of the contrast sum_j a_j S(t_j): e_k for RD/RR, ones for RMST.
std::vector<double> contrast_weights(const SurvEstimand& e);

// Plug-in sum_u D_u (sum_{j>=u} a_j S_j)^2 / G_u with D_u = 1/S_u - 1/S_{u-1}.
double survivor_variance(const std::vector<double>& S, const std::vector<double>& G, const std::vector<double>& a);

// Unadjusted variance from the one-step marginal survivor; `gcond` (n x K,
// optional) is the conditional trial censoring whose average gives G-bar.
SurvivalBundle unadjusted_variance_survival(const MarginalSurvival& ms, const std::vector<double>& gbar,
                                            const SurvEstimand& e, const Eigen::MatrixXd* gcond = nullptr);

// Per-observation summands of the one-step adjusted variance.
double rd_summand(const double* S, const double* tau, const double* G, int k, long* floored);
double rmst_summand_fast(const double* S, const double* tau, const double* G, const double* a, int k, long* floored);
double rmst_summand_naive(const double* S, const double* tau, const double* G, int k, long* floored);

enum class RmstAlgorithm { fast, naive };

SurvivalBundle adjusted_variance_rd(const SurvivalDataset& data, const DiscreteSurvivalFit& fit,
                                    const Eigen::MatrixXd& G, int k, Exec exec = Exec::parallel);
SurvivalBundle adjusted_variance_rmst(const SurvivalDataset& data, const DiscreteSurvivalFit& fit,
                                      const Eigen::MatrixXd& G, int k, RmstAlgorithm alg = RmstAlgorithm::fast,
                                      Exec exec = Exec::parallel);

// The two halves of releff_survival, usable on separate samples.
SurvivalBundle survival_unadjusted_bundle(const SurvivalDataset& data, const DiscreteSurvivalFit& fit,
                                          const TrialCensoringSpec& Gspec, const SurvEstimand& e);
SurvivalBundle survival_adjusted_bundle(const SurvivalDataset& data, const DiscreteSurvivalFit& fit,
                                        const TrialCensoringSpec& Gspec, const SurvEstimand& e,
                                        Exec exec = Exec::parallel);

struct SurvivalReleff {
  RelEffEstimate est;
  long floored = 0;
};

SurvivalReleff releff_survival(const SurvivalDataset& data, const DiscreteSurvivalFit& fit,
                               const TrialCensoringSpec& G, const SurvEstimand& e, Exec exec = Exec::parallel);

}  // namespace releff
