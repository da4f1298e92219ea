#include "mnarel/identifiability.hpp"

#include <Eigen/SVD>
#include <algorithm>

namespace mnar {

const char* to_string(IdentStatus s) {
  switch (s) {
    case IdentStatus::Identifiable: return "Identifiable";
    case IdentStatus::NotIdentifiable: return "NotIdentifiable";
    case IdentStatus::IdentifiableOnlyIfGammaZero: return "IdentifiableOnlyIfGammaZero";
    case IdentStatus::Unknown: return "Unknown";
  }
  return "?";
}

const char* to_string(IdentRule r) {
  switch (r) {
    case IdentRule::InstrumentVariable: return "InstrumentVariable";
    case IdentRule::LinearIndependenceBasis: return "LinearIndependenceBasis";
    case IdentRule::NormalCaseI: return "NormalCaseI";
    case IdentRule::NormalCaseII: return "NormalCaseII";
    case IdentRule::NormalCaseIII: return "NormalCaseIII";
    case IdentRule::NoRuleApplies: return "NoRuleApplies";
  }
  return "?";
}

IdentifiabilityVerdict check_instrument(const ModelSpec& spec,
                                        int instrument_index) {
  if (instrument_index < 0 ||
      instrument_index >= static_cast<int>(spec.columns.size()))
    throw std::out_of_range("check_instrument: instrument index out of range");

  IdentifiabilityVerdict v;
  for (int c : spec.propensity) {
    if (c == instrument_index) {
      v.status = IdentStatus::Unknown;
      v.rule = IdentRule::NoRuleApplies;
      v.explanation = "declared instrument also appears in the propensity covariates";
      return v;
    }
  }
  bool in_outcome = false;
  for (const auto& f : spec.outcome.mean_basis)
    in_outcome = in_outcome || f.depends_on(instrument_index);
  for (const auto& f : spec.outcome.logvar_basis)
    in_outcome = in_outcome || f.depends_on(instrument_index);
  if (!in_outcome) {
    v.status = IdentStatus::Unknown;
    v.rule = IdentRule::NoRuleApplies;
    v.explanation = "declared instrument does not enter the outcome bases";
    return v;
  }
  v.status = IdentStatus::Identifiable;
  v.rule = IdentRule::InstrumentVariable;
  v.explanation = "covariate '" + spec.columns[instrument_index] +
                  "' is excluded from the propensity and drives the outcome model";
  return v;
}

IdentifiabilityVerdict check_normal_family(const ModelSpec& spec,
                                           bool gamma_zero_hypothesis) {
  if (spec.outcome.kind != Family::NormalBasis)
    throw std::invalid_argument("check_normal_family: spec is not NormalBasis");
  IdentifiabilityVerdict v;

  bool any_custom = false;
  int mean_max_deg = 0, logvar_max_deg = 0;
  bool mean_quadratic = false, logvar_nonconstant = false;
  for (const auto& f : spec.outcome.mean_basis) {
    if (f.is_custom()) { any_custom = true; continue; }
    mean_max_deg = std::max(mean_max_deg, f.degree());
    if (f.degree() == 2) mean_quadratic = true;
  }
  for (const auto& f : spec.outcome.logvar_basis) {
    if (f.is_custom()) { any_custom = true; continue; }
    logvar_max_deg = std::max(logvar_max_deg, f.degree());
    if (f.degree() >= 1) logvar_nonconstant = true;
  }

  if (any_custom || mean_max_deg > 2 || logvar_max_deg > 1) {
    v.status = IdentStatus::Unknown;
    v.rule = IdentRule::NoRuleApplies;
    v.explanation = "basis shape outside the quadratic-mean / log-linear-variance family";
    return v;
  }
  if (mean_quadratic) {
    v.status = IdentStatus::Identifiable;
    v.rule = IdentRule::NormalCaseI;
    v.explanation = "quadratic mean term present";
    return v;
  }
  if (!logvar_nonconstant) {
    v.status = IdentStatus::NotIdentifiable;
    v.rule = IdentRule::NormalCaseII;
    v.explanation = "linear mean with constant variance: the tilt is absorbed "
                    "into the intercept and slope";
    return v;
  }
  v.rule = IdentRule::NormalCaseIII;
  if (gamma_zero_hypothesis) {
    v.status = IdentStatus::Identifiable;
    v.explanation = "linear mean, log-linear variance, gamma fixed at zero";
  } else {
    v.status = IdentStatus::IdentifiableOnlyIfGammaZero;
    v.explanation = "linear mean with log-linear variance: identifiable only when gamma = 0";
  }
  return v;
}

IdentifiabilityVerdict check_linear_independence(const ModelSpec& spec,
                                                 const MatrixXd& sample_points) {
  const int dx = static_cast<int>(spec.columns.size());
  std::vector<const Feature*> extra;
  for (const auto& f : spec.outcome.mean_basis)
    if (!f.is_constant() && !(!f.is_custom() && f.degree() == 1)) extra.push_back(&f);
  for (const auto& f : spec.outcome.logvar_basis)
    if (!f.is_constant() && !(!f.is_custom() && f.degree() == 1)) extra.push_back(&f);

  IdentifiabilityVerdict v;
  if (extra.empty()) {
    v.status = IdentStatus::Unknown;
    v.rule = IdentRule::NoRuleApplies;
    v.explanation = "no basis term beyond {1, x}: the rank test cannot separate gamma";
    return v;
  }
  const int cols = 1 + dx + static_cast<int>(extra.size());
  if (sample_points.rows() < cols)
    throw std::invalid_argument("check_linear_independence: need at least " +
                                std::to_string(cols) + " sample points");
  MatrixXd E(sample_points.rows(), cols);
  for (int i = 0; i < sample_points.rows(); ++i) {
    VectorXd x = sample_points.row(i).transpose();
    E(i, 0) = 1.0;
    E.row(i).segment(1, dx) = x.transpose();
    for (size_t j = 0; j < extra.size(); ++j) E(i, 1 + dx + j) = (*extra[j])(x);
  }
  Eigen::JacobiSVD<MatrixXd> svd(E);
  double smax = svd.singularValues()(0);
  double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (smin > 1e-8 * smax) {
    v.status = IdentStatus::Identifiable;
    v.rule = IdentRule::LinearIndependenceBasis;
    v.explanation = "{1, x, basis terms} numerically linearly independent "
                    "(a_1(gamma)=0.5 gamma^2 injectivity assumed on a half-line)";
  } else {
    v.status = IdentStatus::Unknown;
    v.rule = IdentRule::NoRuleApplies;
    v.explanation = "evaluation matrix is rank deficient";
  }
  return v;
}

IdentifiabilityVerdict check_spec(const ModelSpec& spec,
                                  const MatrixXd* sample_points) {
  if (spec.instrument) {
    IdentifiabilityVerdict v = check_instrument(spec, *spec.instrument);
    if (v.status == IdentStatus::Identifiable) return v;
  }
  if (spec.outcome.kind == Family::NormalBasis) {
    IdentifiabilityVerdict v = check_normal_family(spec);
    if (v.status != IdentStatus::Unknown) return v;
  }
  if (sample_points) return check_linear_independence(spec, *sample_points);
  IdentifiabilityVerdict v;
  v.explanation = "no applicable rule";
  return v;
}

}  // namespace mnar
