#pragma once

#include "mnarel/inference.hpp"

namespace mnar {

enum class ScenarioName { Example1, Example2, Example3, Custom };

// Data-generating scenario: covariate law, propensity truth on the
// conditional (alpha*) scale, and the outcome family with its true xi.
struct ScenarioSpec {
  ScenarioName name = ScenarioName::Custom;
  ModelSpec spec;           // the correctly specified fitting model
  double alpha_star = 0.0;  // conditional-propensity intercept
  VectorXd beta;            // aligned with spec.propensity
  double gamma = 0.0;
  VectorXd xi;              // true outcome parameters
  std::function<VectorXd(std::mt19937_64&)> covariate_sampler;
  int n = 0;
};

// Built-in scenario presets; sigma2 is the outcome variance setting (Example 3 accepts
// exp(0.7) as well as 1).
ScenarioSpec example_scenario(int which, double sigma2, int n);

// Draw a dataset: x, then d from the marginal missingness odds
// exp(alpha* + x_p' beta + c), then y from f (d=1) or its exponential tilt
// (d=0, masked).  y_full keeps the pre-mask responses.
Dataset generate(const ScenarioSpec& scenario, std::uint64_t seed);

struct TruthEstimate {
  double mu = 0.0;
  double miss = 0.0;  // pr(D = 0)
  double mu_se = 0.0;
  double miss_se = 0.0;
};

TruthEstimate true_mu_eta(const ScenarioSpec& scenario, long draws,
                          std::uint64_t seed);

struct Baselines {
  double ybar_r = 0.0;
  std::optional<double> ybar_full;
};

Baselines baselines(const Dataset& data);

struct MCReport {
  std::string estimator;
  int reps = 0;
  double rb_pct = 0.0;
  double mse_x100 = 0.0;
  double coverage_pct = std::numeric_limits<double>::quiet_NaN();
  int failures = 0;
  std::uint64_t seed = 0;
};

struct RunMcOptions {
  FitOptions fit;
  bool with_ci = true;
  VarianceSource ci_source = VarianceSource::WaldBootstrap;
  int boot_B = 200;
  double level = 0.95;
  int threads = 1;  // 1 = serial reference loop; else OpenMP
  // ground truth; NaN means "estimate with 1e6 draws"
  double true_mu = std::numeric_limits<double>::quiet_NaN();
};

// Monte Carlo harness: RB, MSE and coverage for mu_hat plus the
// complete-case and full-data baselines.
std::vector<MCReport> run_mc(const ScenarioSpec& scenario, int reps,
                             std::uint64_t seed, const RunMcOptions& options);

}  // namespace mnar
