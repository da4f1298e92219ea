#pragma once

#include "mnarel/identifiability.hpp"
#include "mnarel/inference.hpp"
#include "mnarel/simulation.hpp"

namespace mnar {

// Parse / validation failure carrying a 1-based line number (0 = not
// line-specific, e.g. a bad model-spec field).
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& msg)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg
                                    : msg),
        line(line) {}
  int line;
};

// Model specification as it appears in the config file: everything by
// column name and basis-term string.
struct SpecConfig {
  std::vector<std::string> columns;      // covariate columns, in order
  std::string response;                  // response column in the CSV
  std::vector<std::string> propensity;   // covariate names
  std::vector<std::string> mean_basis;   // term strings: 1, x, x^2, x1*x2
  std::vector<std::string> logvar_basis;
  std::string family = "normal";
  std::optional<std::string> instrument;
  struct Recode {
    std::string column;
    double from = 0.0;
    double to = 0.0;
  };
  std::vector<Recode> recodes;  // applied to covariates on read
};

// Basis-term grammar: `1`, `col`, `col^k`, and `*`-products of those.
Feature parse_term(const std::string& term,
                   const std::vector<std::string>& columns);

SpecConfig parse_spec_json(const std::string& text);
SpecConfig read_spec_file(const std::string& path);
ModelSpec build_model_spec(const SpecConfig& config);

// CSV with a header row; response missing when the field is empty or NA.
Dataset read_dataset_csv(const std::string& path, const SpecConfig& config);
void write_dataset_csv(const std::string& path, const Dataset& data,
                       const std::vector<std::string>& columns,
                       const std::string& response);

enum class OutFormat { Table, Json, Csv };
OutFormat parse_format(const std::string& name);

// Everything cmd_fit reports, pre-assembled so the three serializers agree.
struct FitReport {
  std::vector<std::string> param_names;  // alpha, beta..., gamma, xi...
  VectorXd theta;
  double alpha_star = 0.0;
  double eta = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
  double sigma2 = 0.0;
  double mu_se = 0.0;
  VectorXd theta_se;  // NaN where the plug-in covariance is unavailable
  IntervalEstimate mu_ci;
  std::optional<IntervalEstimate> mu_ci_boot;
  double ell1 = 0.0;
  double ell2 = 0.0;
  double bic = 0.0;
  bool converged = false;
  double grad_norm = 0.0;
  int iterations = 0;
  IdentifiabilityVerdict ident;
};

FitReport make_fit_report(const FitResult& fit, const Dataset& data,
                          const ModelSpec& spec,
                          const IdentifiabilityVerdict& ident, double level,
                          const std::optional<IntervalEstimate>& boot_ci);

std::string format_fit_report(const FitReport& report, OutFormat format);
std::string format_mc_report(const std::vector<MCReport>& rows,
                             OutFormat format);
std::string format_ident_report(const IdentifiabilityVerdict& verdict,
                                OutFormat format);

}  // namespace mnar
