#include "mnarel/estimation.hpp"

#include <cmath>
#include <limits>

#include "mnarel/optim.hpp"
#include "mnarel/quadrature.hpp"
#include "mnarel/rng.hpp"

namespace mnar {

namespace {

constexpr double kInfeasibleScore = 1e30;

Theta default_init(const Dataset& data, const ModelSpec& spec) {
  const auto& om = spec.outcome;
  if (om.kind != Family::NormalBasis)
    throw std::invalid_argument(
        "fit_mle: GenericDensity models need an explicit initializer");
  const int n = data.n();
  const int n1 = data.n1();
  const double eta = static_cast<double>(n1) / n;

  // xi: least squares on complete cases
  MatrixXd Fm(n1, om.d_mean()), Flv(n1, om.d_logvar());
  VectorXd yo(n1);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    if (data.d(i) != 1) continue;
    Fm.row(k) = om.mean_features(data.x.row(i).transpose()).transpose();
    Flv.row(k) = om.logvar_features(data.x.row(i).transpose()).transpose();
    yo(k) = data.y(i);
    ++k;
  }
  VectorXd xi_mean = ols(Fm, yo);
  VectorXd resid = yo - Fm * xi_mean;
  VectorXd logr2 = resid.array().square().max(1e-8).log();
  VectorXd xi_var = ols(Flv, logr2);
  // E log e^2 = log sigma^2 - 1.27; correct the intercept-ish bias crudely
  // by matching the overall residual variance when a constant term exists
  for (int j = 0; j < om.d_logvar(); ++j) {
    if (om.logvar_basis[j].is_constant()) {
      double target = std::log(std::max(resid.squaredNorm() / std::max(1, n1 - 1), 1e-8));
      VectorXd lv = Flv * xi_var;
      xi_var(j) += target - lv.mean();
      break;
    }
  }

  // (alpha, beta): logistic regression of 1-d on the propensity covariates
  MatrixXd Z(n, 1 + spec.d_beta());
  Eigen::VectorXi miss(n);
  for (int i = 0; i < n; ++i) {
    Z(i, 0) = 1.0;
    Z.row(i).tail(spec.d_beta()) =
        spec.propensity_covariates(data.x.row(i).transpose()).transpose();
    miss(i) = 1 - data.d(i);
  }
  VectorXd coef = logistic_fit(Z, miss);

  Theta th;
  th.alpha = coef(0) + std::log(eta / (1.0 - eta));
  th.beta = coef.tail(spec.d_beta());
  th.gamma = 0.0;  // ignorable anchor
  th.xi.resize(om.dim_xi());
  th.xi.head(om.d_mean()) = xi_mean;
  th.xi.tail(om.d_logvar()) = xi_var;
  return th;
}

}  // namespace

FitResult fit_mle(const Dataset& data, const ModelSpec& spec,
                  const FitOptions& options) {
  data.validate();
  ProfileLikelihood pl(data, spec);
  const int n = data.n();
  const double lambda0 = static_cast<double>(data.n2()) / n;
  const int d_beta = spec.d_beta(), d_xi = spec.outcome.dim_xi();

  // At a stationary point of h(theta, n2/n) the alpha-score forces the inner
  // multiplier to equal n2/n, so maximizing h at the fixed multiplier yields
  // the same MLE as the profile ell2 without an inner solve per evaluation.
  Objective neg = [&](const VectorXd& v, VectorXd* grad) {
    Theta th = Theta::unpack(v, d_beta, d_xi);
    double val;
    try {
      val = pl.h_value(th, lambda0);
      if (grad) *grad = -pl.h_grad(th, lambda0);
    } catch (const std::exception&) {
      if (grad) grad->setZero(v.size());
      return kInfeasibleScore;
    }
    if (!std::isfinite(val)) {
      if (grad) grad->setZero(v.size());
      return kInfeasibleScore;
    }
    return -val;
  };

  Theta base = options.init ? *options.init : default_init(data, spec);
  VectorXd base_v = base.pack();

  OptimResult best;
  best.f = std::numeric_limits<double>::infinity();
  int best_start = -1;
  int starts = std::max(1, options.multistarts);
  int s0 = options.warm_start ? -1 : 0;
  for (int s = s0; s < starts; ++s) {
    VectorXd x0;
    if (s == -1) {
      x0 = options.warm_start->pack();
    } else if (s == 0) {
      x0 = base_v;
    } else {
      auto rng = substream(options.seed, static_cast<std::uint64_t>(s));
      std::normal_distribution<double> nd(0.0, 1.0);
      x0 = base_v;
      for (int j = 0; j < x0.size(); ++j)
        x0(j) += (0.1 * std::abs(base_v(j)) + 0.05) * nd(rng);
    }
    OptimResult r = bfgs_minimize(neg, x0, 100.0 * options.tol, options.max_iter);
    int bfgs_iters = r.iterations;
    r = newton_polish(neg, r.x, options.tol, 30);
    r.iterations += bfgs_iters;
    if (r.f < best.f) {
      best = r;
      best_start = s;
    }
    // warm starts that converge end the search immediately
    if (s == -1 && best.converged) break;
  }

  FitResult fit;
  fit.theta_hat = Theta::unpack(best.x, d_beta, d_xi);
  fit.eta_hat = static_cast<double>(data.n1()) / n;
  fit.converged = best.converged;
  fit.grad_norm = best.grad.lpNorm<Eigen::Infinity>();
  fit.iterations = best.iterations;
  fit.multistart_index = best_start;

  ELState st;
  try {
    st = pl.state(fit.theta_hat);
  } catch (const std::exception&) {
    // the best point found is EL-infeasible or overflows: report failure
    // rather than throwing out of a fit that is already non-converged
    fit.converged = false;
    fit.ell1 = fit.ell2 = -std::numeric_limits<double>::infinity();
    return fit;
  }
  fit.lambda_hat = st.degenerate ? lambda0 : st.lambda;
  fit.weights = el_weights_from_t(st.t_values, fit.lambda_hat);
  fit.ell1 = st.ell1;
  fit.ell2 = st.ell2;

  // V_hat and the parameter covariance
  const int dt = spec.d_theta();
  MatrixXd V = MatrixXd::Zero(dt, dt);
  for (int i = 0; i < n; ++i) {
    VectorXd xi_row = data.x.row(i).transpose();
    double pi = propensity_from_t(st.t_values(i), fit.eta_hat);
    VectorXd gt = grad_t(xi_row, fit.theta_hat, spec);
    V += pi * (1.0 - pi) * gt * gt.transpose();
    if (data.d(i) == 1) {
      VectorXd sc = score_xi(data.y(i), xi_row, fit.theta_hat.xi, spec.outcome);
      V.block(2 + d_beta, 2 + d_beta, d_xi, d_xi) += sc * sc.transpose();
    }
  }
  V /= n;
  Eigen::JacobiSVD<MatrixXd> svd(V);
  double cond = svd.singularValues()(0) /
                std::max(svd.singularValues()(dt - 1),
                         std::numeric_limits<double>::min());
  if (!(cond < 1e12)) {
    fit.singular_vhat = true;
  } else {
    fit.vhat = V;
    MatrixXd cov = V.inverse();
    cov(0, 0) -= 1.0 / (fit.eta_hat * (1.0 - fit.eta_hat));
    fit.theta_cov = cov;
  }

  fit.mu_hat = mu_hat(fit, data, spec);
  if (!fit.singular_vhat) {
    fit.sigma2_hat = sigma2_hat(fit, data, spec);
    fit.mu_se = std::sqrt(std::max(fit.sigma2_hat, 0.0) / n);
  }
  return fit;
}

double K_fun(const VectorXd& x, const Theta& theta, double eta,
             const ModelSpec& spec, MuRoute route) {
  if (!(eta > 0.0 && eta < 1.0)) {
    if (eta == 1.0) {  // no missing mass: K reduces to the outcome mean
      if (spec.outcome.kind == Family::NormalBasis)
        return spec.outcome.mean(x, theta.xi);
    }
    throw std::invalid_argument("K_fun: eta must lie in (0,1)");
  }
  const auto& om = spec.outcome;
  if (om.kind == Family::NormalBasis && route == MuRoute::ClosedForm) {
    double m = om.mean(x, theta.xi);
    double s2 = om.variance(x, theta.xi);
    double t = t_fun(x, theta, spec);
    double pi = propensity_from_t(t, eta);
    // K = (1-pi) m + pi (m + gamma s2)
    return m + pi * theta.gamma * s2;
  }
  // quadrature route: K = (1-pi) E[Y|x,D=1] + pi * tilted mean
  const auto& gh = GaussHermite::standard();
  double loc, scale;
  if (om.kind == Family::NormalBasis) {
    loc = om.mean(x, theta.xi);
    scale = std::sqrt(om.variance(x, theta.xi));
  } else {
    loc = om.location_hint ? om.location_hint(x, theta.xi) : 0.0;
    scale = om.scale_hint ? om.scale_hint(x, theta.xi) : 1.0;
  }
  const double sq2s = std::sqrt(2.0) * scale;
  const int nq = static_cast<int>(gh.nodes.size());
  double s_plain = 0.0, sy_plain = 0.0, s_tilt = 0.0, sy_tilt = 0.0;
  for (int k = 0; k < nq; ++k) {
    double yk = loc + sq2s * gh.nodes(k);
    double lf = log_f(yk, x, theta.xi, om);
    double base = std::exp(gh.log_weights(k) + gh.nodes(k) * gh.nodes(k) + lf);
    double tilt = base * std::exp(theta.gamma * (yk - loc));  // relative tilt
    s_plain += base;
    sy_plain += yk * base;
    s_tilt += tilt;
    sy_tilt += yk * tilt;
  }
  double t = t_fun(x, theta, spec);
  double pi = propensity_from_t(t, eta);
  return (1.0 - pi) * (sy_plain / s_plain) + pi * (sy_tilt / s_tilt);
}

double mu_hat(const FitResult& fit, const Dataset& data, const ModelSpec& spec,
              MuRoute route) {
  double s = 0.0;
  for (int i = 0; i < data.n(); ++i)
    s += K_fun(data.x.row(i).transpose(), fit.theta_hat, fit.eta_hat, spec, route);
  return s / data.n();
}

VectorXd grad_K(const VectorXd& x, const Theta& theta, double eta,
                const ModelSpec& spec) {
  const auto& om = spec.outcome;
  const int db = spec.d_beta();
  if (om.kind == Family::NormalBasis) {
    VectorXd mf = om.mean_features(x);
    VectorXd lvf = om.logvar_features(x);
    double m = mf.dot(theta.xi.head(om.d_mean()));
    double s2 = om.variance(x, theta.xi);
    double gam = theta.gamma;
    double t = t_fun(x, theta, spec);
    double pi = propensity_from_t(t, eta);
    double dpi = pi * (1.0 - pi);  // d pi / d t
    VectorXd g(spec.d_theta());
    g(0) = gam * s2 * dpi;
    g.segment(1, db) = gam * s2 * dpi * spec.propensity_covariates(x);
    g(1 + db) = s2 * pi + gam * s2 * dpi * (m + gam * s2);
    g.segment(2 + db, om.d_mean()) = (1.0 + gam * gam * s2 * dpi) * mf;
    g.tail(om.d_logvar()) =
        (gam * s2 * (pi + 0.5 * gam * gam * s2 * dpi)) * lvf;
    return g;
  }
  // central differences for GenericDensity
  VectorXd v = theta.pack();
  VectorXd g(v.size());
  for (int j = 0; j < v.size(); ++j) {
    double h = 1e-6 * (1.0 + std::abs(v(j)));
    VectorXd vp = v, vm = v;
    vp(j) += h;
    vm(j) -= h;
    Theta tp = Theta::unpack(vp, db, om.dim_xi());
    Theta tm = Theta::unpack(vm, db, om.dim_xi());
    g(j) = (K_fun(x, tp, eta, spec, MuRoute::Quadrature) -
            K_fun(x, tm, eta, spec, MuRoute::Quadrature)) /
           (2.0 * h);
  }
  return g;
}

double sigma2_hat(const FitResult& fit, const Dataset& data, const ModelSpec& spec) {
  if (!fit.vhat)
    throw std::runtime_error("sigma2_hat: V_hat unavailable (singular)");
  const int n = data.n();
  const int dt = spec.d_theta();
  VectorXd A = VectorXd::Zero(dt);
  double sk = 0.0, sk2 = 0.0;
  for (int i = 0; i < n; ++i) {
    VectorXd xi_row = data.x.row(i).transpose();
    double K = K_fun(xi_row, fit.theta_hat, fit.eta_hat, spec);
    sk += K;
    sk2 += K * K;
    A += grad_K(xi_row, fit.theta_hat, fit.eta_hat, spec);
  }
  A /= n;
  double varK = sk2 / n - (sk / n) * (sk / n);
  double quad = A.dot(fit.vhat->ldlt().solve(A));
  return varK + quad;
}

double lr_stat(const Theta& theta0, const Dataset& data, const ModelSpec& spec,
               const FitResult& fit) {
  ProfileLikelihood pl(data, spec);
  double l0;
  try {
    l0 = pl.ell2(theta0);
  } catch (const NoInteriorRoot&) {
    return std::numeric_limits<double>::infinity();
  }
  double r = 2.0 * (fit.ell2 - l0);
  if (r < 0.0 && r > -1e-8) r = 0.0;  // roundoff at theta0 == theta_hat
  return r;
}

double bic(const FitResult& fit, const Dataset& data) {
  int k = fit.theta_hat.dim() + 1;  // theta plus eta
  return -2.0 * (fit.ell1 + fit.ell2) + k * std::log(static_cast<double>(data.n()));
}

}  // namespace mnar
