#include "mnarel/inference.hpp"

#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mnarel/rng.hpp"
#include "mnarel/stats.hpp"

namespace mnar {

namespace {

IntervalEstimate make_interval(double est, double se, double level,
                               VarianceSource method) {
  IntervalEstimate ci;
  ci.estimate = est;
  ci.se = se;
  ci.level = level;
  ci.method = method;
  double z = normal_quantile(0.5 * (1.0 + level));
  ci.lower = est - z * se;
  ci.upper = est + z * se;
  return ci;
}

}  // namespace

IntervalEstimate wald_ci_mu(const FitResult& fit, double level,
                            VarianceSource source,
                            std::optional<double> bootstrap_se,
                            int bootstrap_failures) {
  double se;
  if (source == VarianceSource::WaldPlugin) {
    if (fit.singular_vhat)
      throw std::runtime_error("wald_ci_mu: plugin variance unavailable");
    se = fit.mu_se;
  } else {
    if (!bootstrap_se)
      throw std::invalid_argument("wald_ci_mu: bootstrap se not supplied");
    se = *bootstrap_se;
  }
  IntervalEstimate ci = make_interval(fit.mu_hat, se, level, source);
  ci.bootstrap_failures = bootstrap_failures;
  return ci;
}

IntervalEstimate wald_ci_theta(const FitResult& fit, int index, double level,
                               int n) {
  if (!fit.theta_cov)
    throw std::runtime_error("wald_ci_theta: covariance unavailable");
  double v = (*fit.theta_cov)(index, index);
  if (!(v > 0))
    throw std::runtime_error("wald_ci_theta: non-positive variance estimate");
  double se = std::sqrt(v / n);
  return make_interval(fit.theta_hat.pack()(index), se, level,
                       VarianceSource::WaldPlugin);
}

LrTestResult lr_test(const Theta& theta0, const Dataset& data,
                     const ModelSpec& spec, const FitResult& fit, double level) {
  LrTestResult r;
  r.stat = lr_stat(theta0, data, spec, fit);
  int df = theta0.dim();
  r.critical = chisq_quantile(level, df);
  r.reject = r.stat > r.critical;
  r.pvalue = std::isinf(r.stat) ? 0.0 : 1.0 - chisq_cdf(r.stat, df);
  return r;
}

BootstrapResult bootstrap(const Dataset& data, const ModelSpec& spec, int B,
                          std::uint64_t seed, const FitResult& full_fit,
                          const BootstrapOptions& options) {
  if (B < 50) throw std::invalid_argument("bootstrap: B must be at least 50");
  const int n = data.n();
  const int dt = spec.d_theta();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  BootstrapResult out;
  out.estimates = MatrixXd::Constant(B, 1 + dt, nan);

  auto replicate = [&](int b) {
    auto rng = substream(seed, static_cast<std::uint64_t>(b));
    std::uniform_int_distribution<int> pick(0, n - 1);
    Dataset res;
    res.x.resize(n, data.x.cols());
    res.d.resize(n);
    res.y.resize(n);
    for (int i = 0; i < n; ++i) {
      int j = pick(rng);
      res.x.row(i) = data.x.row(j);
      res.d(i) = data.d(j);
      res.y(i) = data.y(j);
    }
    if (res.n1() < 1 || res.n2() < 1) return;  // degenerate resample: failure
    FitOptions fo = options.fit;
    fo.warm_start = full_fit.theta_hat;
    fo.seed = splitmix64(seed) ^ static_cast<std::uint64_t>(b);
    try {
      FitResult f = fit_mle(res, spec, fo);
      if (!f.converged) return;
      out.estimates(b, 0) = f.mu_hat;
      out.estimates.row(b).tail(dt) = f.theta_hat.pack().transpose();
    } catch (const std::exception&) {
      // counted below via the NaN row
    }
  };

  if (options.threads == 1) {
    for (int b = 0; b < B; ++b) replicate(b);
  } else {
#ifdef _OPENMP
    if (options.threads > 1) omp_set_num_threads(options.threads);
#pragma omp parallel for schedule(dynamic)
    for (int b = 0; b < B; ++b) replicate(b);
#else
    for (int b = 0; b < B; ++b) replicate(b);
#endif
  }

  // aggregate serially, in replicate order
  int ok = 0;
  VectorXd mean = VectorXd::Zero(1 + dt);
  for (int b = 0; b < B; ++b) {
    if (std::isnan(out.estimates(b, 0))) continue;
    mean += out.estimates.row(b).transpose();
    ++ok;
  }
  out.failures = B - ok;
  if (ok * 2 < B)
    throw std::runtime_error("bootstrap: more than half of " + std::to_string(B) +
                             " refits failed (" + std::to_string(out.failures) +
                             " failures)");
  mean /= ok;
  VectorXd ss = VectorXd::Zero(1 + dt);
  for (int b = 0; b < B; ++b) {
    if (std::isnan(out.estimates(b, 0))) continue;
    VectorXd d = out.estimates.row(b).transpose() - mean;
    ss += d.cwiseProduct(d);
  }
  VectorXd sd = (ss / std::max(1, ok - 1)).cwiseSqrt();
  out.se_mu = sd(0);
  out.se_theta = sd.tail(dt);
  return out;
}

}  // namespace mnar
