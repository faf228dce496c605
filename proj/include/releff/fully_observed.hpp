#pragma once

#include <string>
#include <vector>

#include "releff/data.hpp"
#include "releff/nuisance.hpp"

namespace releff {

enum class Estimand { ATE, DIM, MW, LOR };
enum class Kind { unadjusted, fully_adjusted, working_model };

std::string to_string(Estimand e);
std::string to_string(Kind k);
Estimand parse_estimand(const std::string& s);
Kind parse_kind(const std::string& s);

// Monotone scores u(1..K) for the DIM estimand.
struct TransformU {
  std::vector<double> values;

  static TransformU identity(int K);
  // b_k = u(k) - u(k+1), k = 1..K-1
  std::vector<double> b() const;
  void validate(int K) const;
};

struct VarianceBundle {
  double sigma2 = 0.0;
  std::vector<double> if_values;
  Kind label = Kind::unadjusted;
  Estimand estimand = Estimand::DIM;
  std::vector<double> wt;
  std::vector<std::string> warnings;
};

struct RelEffEstimate {
  double phi = 0.0;
  std::vector<double> if_values;
  double se = 0.0;
  Kind kind = Kind::fully_adjusted;
  Estimand estimand = Estimand::DIM;
  double n = 0.0;
  double sigma2_num = 0.0;
  double sigma2_den = 0.0;
  std::vector<double> wt;
  std::vector<std::string> warnings;
};

VarianceBundle unadjusted_variance(const OrdinalDataset& data, Estimand est, const TransformU* u = nullptr);
VarianceBundle unadjusted_variance(const ContinuousDataset& data);

VarianceBundle fully_adjusted_variance(const OrdinalDataset& data, Estimand est, const NuisanceOptions& opt,
                                       const TransformU* u = nullptr);
VarianceBundle fully_adjusted_variance(const ContinuousDataset& data, const NuisanceOptions& opt);

VarianceBundle working_model_variance(const OrdinalDataset& data, Estimand est, const WorkingModelFit& fit,
                                      const TransformU* u = nullptr);
VarianceBundle working_model_variance(const ContinuousDataset& data, const LinearFit& fit);

RelEffEstimate releff(const VarianceBundle& num, const VarianceBundle& den);

// Fits the nuisance models and returns phi for kind in {fully_adjusted, working_model}.
RelEffEstimate estimate_releff(const OrdinalDataset& data, Estimand est, Kind kind, const NuisanceOptions& opt,
                               const TransformU* u = nullptr);
RelEffEstimate estimate_releff(const ContinuousDataset& data, Kind kind, const NuisanceOptions& opt);

}  // namespace releff
