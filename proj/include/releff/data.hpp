#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

namespace releff {

enum class CovKind { discrete, continuous };

struct Covariate {
  std::string name;
  CovKind kind = CovKind::continuous;
  std::vector<std::string> levels;  // discrete only
};

struct CovariateSchema {
  std::vector<Covariate> columns;

  std::size_t d() const { return columns.size(); }
  bool has_continuous() const;
  bool all_discrete() const { return !has_continuous(); }
  void validate() const;
};

// Covariates are stored as an n x d matrix; a discrete column holds the
// 0-based level index. An empty `wt` means every row has weight one; weights
// let the same code run on count-compressed samples and on exact populations.
struct OrdinalDataset {
  CovariateSchema schema;
  int K = 2;
  std::vector<int> y;  // levels 1..K
  Eigen::MatrixXd w;
  std::vector<double> wt;

  std::size_t n() const { return y.size(); }
  double total_weight() const;
  void validate() const;
};

struct ContinuousDataset {
  CovariateSchema schema;
  std::vector<double> y;
  Eigen::MatrixXd w;
  std::vector<double> wt;
  double y_min = 0.0;
  double y_max = 0.0;

  std::size_t n() const { return y.size(); }
  double total_weight() const;
  void validate() const;
};

struct SurvivalDataset {
  CovariateSchema schema;
  std::vector<double> grid;  // t_1 < ... < t_K
  std::vector<int> y;        // grid index 1..K
  std::vector<int> delta;
  Eigen::MatrixXd w;

  std::size_t n() const { return y.size(); }
  int K() const { return static_cast<int>(grid.size()); }
  void validate() const;
};

// One row per (distinct source row, arm) when produced by the bootstrap, with
// `wt` holding the multiplicity; explicit trials carry unit weights.
struct TrialDataset {
  CovariateSchema schema;
  int K = 0;  // 0 for a continuous outcome
  std::vector<double> y;
  Eigen::MatrixXd w;
  std::vector<int> a;
  std::vector<double> wt;
  double pi = 0.5;

  std::size_t n() const { return y.size(); }
};

struct Empirical {
  std::vector<double> p;    // p[k-1] = P(Y = k)
  std::vector<double> F;    // F[k-1] = P(Y <= k)
  std::vector<double> eta;  // eta[k-1] = P(Y < k) + P(Y = k) / 2
};

struct OutcomeSpec {
  enum class Type { ordinal, continuous, survival } type = Type::ordinal;
  int K = 0;
  std::vector<double> grid;  // explicit survival grid, or empty
  double bin_width = 0.0;    // survival binning when no grid is given
  double horizon = 0.0;      // last grid point for binning; 0 = cover the data
};

OrdinalDataset load_ordinal_csv(const std::string& path, const CovariateSchema& schema, int K);
ContinuousDataset load_continuous_csv(const std::string& path, const CovariateSchema& schema);
SurvivalDataset load_survival_csv(const std::string& path, const CovariateSchema& schema,
                                  const OutcomeSpec& spec);

std::vector<double> make_grid(double bin_width, double horizon);
// Smallest j with t_j >= t (1-based); 0 if t exceeds the last grid point.
int bin_index(double t, const std::vector<double>& grid);
// Bins (time, event) pairs; times past t_K become censorings at t_K.
void bin_survival(const std::vector<double>& times, const std::vector<int>& events,
                  const std::vector<double>& grid, std::vector<int>& y, std::vector<int>& delta);

Empirical empirical_summary(const OrdinalDataset& data);
Empirical empirical_from_levels(const std::vector<int>& y, int K, const std::vector<double>& wt);

void validate_trial(const TrialDataset& data);

// Exact-cell labelling of covariate rows: ids[i] in 0..(n_cells-1), ordered by
// first appearance.
struct CellIndex {
  std::vector<int> ids;
  int n_cells = 0;
  std::vector<int> first_row;  // a representative row of each cell
};
CellIndex cell_index(const Eigen::MatrixXd& w);

OrdinalDataset subset(const OrdinalDataset& data, const std::vector<std::size_t>& rows);
ContinuousDataset subset(const ContinuousDataset& data, const std::vector<std::size_t>& rows);
SurvivalDataset subset(const SurvivalDataset& data, const std::vector<std::size_t>& rows);

// Row-for-row expansion of a weighted trial into unit-weight rows.
TrialDataset expand(const TrialDataset& trial);

}  // namespace releff
