#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "releff/data.hpp"

namespace releff {

// Covariate expansion: discrete columns become level dummies (first level is
// the reference); continuous columns become powers 1..degree, optionally of
// the standardized value.
class Basis {
 public:
  Basis() = default;
  static Basis make(const CovariateSchema& schema, const Eigen::MatrixXd& w, const std::vector<double>& wt,
                    int degree, bool standardize);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  Eigen::MatrixXd expand(const Eigen::MatrixXd& w) const;
  void expand_row(const Eigen::Ref<const Eigen::RowVectorXd>& w, double* out) const;

 private:
  CovariateSchema schema_;
  int degree_ = 1;
  int dim_ = 0;
  std::vector<double> center_, scale_;
};

struct LinearFit {
  double alpha = 0.0;
  Eigen::VectorXd beta;

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const { return alpha + x.dot(beta); }
};

// Weighted least squares of y on [1, X].
LinearFit fit_ols(const Eigen::MatrixXd& X, const std::vector<double>& y, const std::vector<double>& wt = {});
LinearFit fit_ols(const ContinuousDataset& data);

// Binary logistic model with a separate intercept per group:
//   logit P(r = 1 | row) = alpha[group] + beta' x.
// Groups whose responses are all 0 (all 1) get alpha = -inf (+inf) and are
// dropped from the optimization.
struct GroupedLogisticProblem {
  int n_groups = 0;
  std::vector<int> group;
  Eigen::MatrixXd X;
  std::vector<double> r;
  std::vector<double> wt;  // empty = unit weights
};

struct NewtonOptions {
  int max_iter = 100;
  double grad_tol = 1e-8;    // on ||gradient||_2 / total weight
  double start_clip = 20.0;  // |alpha| bound of the starting values
  double separation_eta = 30.0;
};

enum class FitStatus { converged, max_iter, separation };

struct GroupedLogisticFit {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  FitStatus status = FitStatus::max_iter;
  int iterations = 0;
  double grad_norm = 0.0;
  double loglik = 0.0;

  bool converged() const { return status == FitStatus::converged; }
};

GroupedLogisticFit fit_grouped_logistic(const GroupedLogisticProblem& prob, const NewtonOptions& opt = {});

// Log-likelihood with its analytic gradient and Hessian in the free
// parameters (finite alphas in group order, then beta).
struct LogLikDerivatives {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};
LogLikDerivatives grouped_logistic_derivatives(const GroupedLogisticProblem& prob, const std::vector<int>& free_groups,
                                               const Eigen::VectorXd& params);

// Proportional-odds working model logit theta(k, w) = alpha_k + beta' x(w),
// fitted by the pooled binary loss over k = 1..K-1.
struct WorkingModelFit {
  Eigen::VectorXd alpha;  // K-1 thresholds, possibly +-inf
  Eigen::VectorXd beta;
  bool converged = false;
  FitStatus status = FitStatus::max_iter;
  int iterations = 0;
  double grad_norm = 0.0;
  std::vector<std::string> warnings;

  int K() const { return static_cast<int>(alpha.size()) + 1; }
  double theta(int k, const Eigen::Ref<const Eigen::RowVectorXd>& x) const;  // k in 1..K-1
};

// Regression design for working models: dummies for discrete columns, raw
// values for continuous ones.
Eigen::MatrixXd working_design(const CovariateSchema& schema, const Eigen::MatrixXd& w);

WorkingModelFit fit_proportional_odds(const std::vector<int>& y, int K, const Eigen::MatrixXd& X,
                                      const std::vector<double>& wt = {}, const NewtonOptions& opt = {});
WorkingModelFit fit_proportional_odds(const OrdinalDataset& data, const NewtonOptions& opt = {});

enum class MeanStrategy { group_mean, polynomial };

struct NuisanceOptions {
  MeanStrategy strategy = MeanStrategy::group_mean;
  int q_max = 5;
};

// Default strategy: exact-cell means when every covariate is discrete.
NuisanceOptions default_nuisance(const CovariateSchema& schema, int q_max = 5);

class ConditionalMeanModel {
 public:
  static ConditionalMeanModel fit(const std::vector<double>& targets, const CovariateSchema& schema,
                                  const Eigen::MatrixXd& w, const std::vector<double>& wt,
                                  const NuisanceOptions& opt);

  MeanStrategy strategy() const { return strategy_; }
  int selected_degree() const { return degree_; }
  // Falls back to the grand mean for an unseen cell and sets *fallback.
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& w, bool* fallback = nullptr) const;
  const std::vector<double>& fitted() const { return fitted_; }
  const std::vector<double>& bic() const { return bic_; }

 private:
  MeanStrategy strategy_ = MeanStrategy::group_mean;
  int degree_ = 0;
  double grand_mean_ = 0.0, lo_ = 0.0, hi_ = 0.0;
  std::map<std::vector<double>, double> cells_;
  Basis basis_;
  LinearFit lin_;
  std::vector<double> fitted_, bic_;
};

// Conditional CDF theta(k, W_i) of an ordinal outcome on the fitting rows:
// within-cell frequencies, or a per-level logistic fit on a BIC-selected
// polynomial basis.
struct ConditionalCdf {
  Eigen::MatrixXd theta;  // n x (K-1)
  MeanStrategy strategy = MeanStrategy::group_mean;
  int degree = 0;
};
ConditionalCdf fit_conditional_cdf(const OrdinalDataset& data, const NuisanceOptions& opt);

enum class SurvStrategy { stratified, logistic };

struct SurvivalOptions {
  SurvStrategy strategy = SurvStrategy::stratified;
  int q_max = 7;
  int k_max = 0;  // last grid index that must have a non-empty risk set; 0 = K
};
SurvivalOptions default_survival(const CovariateSchema& schema, int q_max = 7);

// Discrete hazard fit for events or censorings.
struct HazardModel {
  SurvStrategy strategy = SurvStrategy::stratified;
  int K = 0;
  std::map<std::vector<double>, std::vector<double>> strata;
  std::vector<double> pooled;
  Basis basis;
  GroupedLogisticFit fit;
  int degree = 0;

  void eval(const Eigen::Ref<const Eigen::RowVectorXd>& w, double* h) const;
};

struct DiscreteSurvivalFit {
  SurvStrategy strategy = SurvStrategy::stratified;
  int K = 0;
  HazardModel event, censor;
  // Tabulated on the fitting rows, n x K; column j-1 holds time t_j.
  Eigen::MatrixXd h, S, H;
  std::vector<std::string> warnings;

  // Conditional hazard, survivor and censoring survivor at a covariate row.
  void evaluate(const Eigen::Ref<const Eigen::RowVectorXd>& w, std::vector<double>& hv, std::vector<double>& Sv,
                std::vector<double>& Hv) const;
};

DiscreteSurvivalFit fit_discrete_survival(const SurvivalDataset& data, const SurvivalOptions& opt);

}  // namespace releff
