#pragma once

#include "mnarel/model.hpp"

namespace mnar {

enum class IdentStatus {
  Identifiable,
  NotIdentifiable,
  IdentifiableOnlyIfGammaZero,
  Unknown,
};

enum class IdentRule {
  InstrumentVariable,
  LinearIndependenceBasis,
  NormalCaseI,
  NormalCaseII,
  NormalCaseIII,
  NoRuleApplies,
};

struct IdentifiabilityVerdict {
  IdentStatus status = IdentStatus::Unknown;
  IdentRule rule = IdentRule::NoRuleApplies;
  std::string explanation;
};

const char* to_string(IdentStatus s);
const char* to_string(IdentRule r);

// Instrument rule: the declared covariate is excluded from the propensity
// and enters the outcome mean or variance basis.
IdentifiabilityVerdict check_instrument(const ModelSpec& spec,
                                        int instrument_index);

// Normal-family shape rules: quadratic mean term / non-constant log-variance.
IdentifiabilityVerdict check_normal_family(const ModelSpec& spec,
                                           bool gamma_zero_hypothesis = false);

// Numerical rank of the evaluation matrix of {1, x, nonlinear basis terms}.
IdentifiabilityVerdict check_linear_independence(const ModelSpec& spec,
                                                 const MatrixXd& sample_points);

// Combined decision: instrument first, then the shape rules, then the rank
// check when sample points are available.
IdentifiabilityVerdict check_spec(const ModelSpec& spec,
                                  const MatrixXd* sample_points = nullptr);

}  // namespace mnar
