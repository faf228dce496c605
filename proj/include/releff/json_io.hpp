#pragma once

#include <json.hpp>

#include "releff/bootstrap.hpp"
#include "releff/fully_observed.hpp"
#include "releff/inference.hpp"
#include "releff/simulation.hpp"
#include "releff/survival.hpp"

namespace releff {

using Json = nlohmann::ordered_json;

Json to_json(const RelEffEstimate& e);
Json to_json(const ConfidenceSet& c);
Json to_json(const SplitTest& t);
Json to_json(const BootstrapConfig& c);
Json to_json(const BootstrapResult& r);
Json to_json(const MonteCarloConfig& c);
Json to_json(const McSummary& s);
Json to_json(const SimulationReport& r);
Json to_json(const CovariateSchema& s);
Json to_json(const TrialCensoringSpec& g);
Json to_json(const WorkingModelFit& f);

// Accepted forms: {"marginal": [G_1..G_K]}, {"strata": {"key": [...]}},
// {"exp_rate": r}, {"exp_linear": {"rate": a, "slope": b, "column": c}} for
// G(t, w) = exp(-(a + b w_c) t).
TrialCensoringSpec parse_censoring(const Json& j);

// {"covariates": [{"name": ..., "kind": "discrete"|"continuous", "levels": [...]}]}
CovariateSchema parse_schema(const Json& j);

}  // namespace releff
