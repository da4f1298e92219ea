#pragma once

#include "mnarel/estimation.hpp"

namespace mnar {

enum class VarianceSource { WaldPlugin, WaldBootstrap };

struct IntervalEstimate {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  VarianceSource method = VarianceSource::WaldPlugin;
  double se = 0.0;
  int bootstrap_failures = 0;
};

IntervalEstimate wald_ci_mu(const FitResult& fit, double level,
                            VarianceSource source,
                            std::optional<double> bootstrap_se = std::nullopt,
                            int bootstrap_failures = 0);

IntervalEstimate wald_ci_theta(const FitResult& fit, int index, double level,
                               int n);

struct LrTestResult {
  double stat = 0.0;
  double critical = 0.0;
  bool reject = false;
  double pvalue = 1.0;
};

LrTestResult lr_test(const Theta& theta0, const Dataset& data,
                     const ModelSpec& spec, const FitResult& fit, double level);

struct BootstrapOptions {
  FitOptions fit;
  // threads: 1 = serial reference loop, 0 = all available via OpenMP,
  // k > 1 = OpenMP with k threads.  Results are identical across settings.
  int threads = 1;
};

struct BootstrapResult {
  double se_mu = 0.0;
  VectorXd se_theta;
  int failures = 0;
  MatrixXd estimates;  // B x (1 + d_theta); NaN rows mark failed refits
};

// Resample n rows with replacement, refit (warm-started from the full-data
// MLE), and report standard deviations over the successful refits.
BootstrapResult bootstrap(const Dataset& data, const ModelSpec& spec, int B,
                          std::uint64_t seed, const FitResult& full_fit,
                          const BootstrapOptions& options = {});

}  // namespace mnar
