#pragma once

#include <string>
#include <vector>

#include "releff/data.hpp"
#include "releff/fully_observed.hpp"

namespace releff {

struct TrialEstimate {
  double psi = 0.0;
  Estimand estimand = Estimand::DIM;
  Kind kind = Kind::unadjusted;
};

// For a continuous-outcome trial (K = 0) this is the ATE difference in means.
TrialEstimate dim_unadjusted(const TrialDataset& trial, const TransformU* u = nullptr);
TrialEstimate mw_unadjusted(const TrialDataset& trial);
TrialEstimate lor_unadjusted(const TrialDataset& trial);
TrialEstimate unadjusted_estimate(const TrialDataset& trial, Estimand est, const TransformU* u = nullptr);

// Marginalized arm-specific working models: proportional odds for ordinal
// outcomes, OLS for the ATE.
TrialEstimate working_model_estimate(const TrialDataset& trial, Estimand est, const TransformU* u = nullptr);

// Working-model estimates for several estimands from one pair of arm fits.
// Throws on degenerate fits (NonConvergedFit, BoundaryCDF).
std::vector<TrialEstimate> working_model_estimates(const TrialDataset& trial, const std::vector<Estimand>& ests,
                                                   const TransformU* u = nullptr);

}  // namespace releff
