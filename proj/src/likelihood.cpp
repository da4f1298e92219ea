#include "mnarel/likelihood.hpp"

#include <cmath>
#include <limits>

namespace mnar {

namespace {

// log{1 + lambda(e^t - 1)}, stable for t of either sign.
double log_denom(double t, double lambda) {
  if (lambda > 0.0 && lambda < 1.0) {
    double a = std::log1p(-lambda);
    double b = std::log(lambda) + t;
    double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
  }
  double u = lambda * std::expm1(t);
  if (u <= -1.0) return -std::numeric_limits<double>::infinity();
  return std::log1p(u);
}

// q = lambda e^t / {1 + lambda(e^t - 1)}
double q_frac(double t, double lambda) {
  if (lambda > 0.0 && lambda < 1.0) {
    double z = t + std::log(lambda) - std::log1p(-lambda);
    if (z > 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
  }
  double denom = 1.0 + lambda * std::expm1(t);
  return lambda * std::exp(t) / denom;
}

}  // namespace

LambdaResult solve_lambda(const VectorXd& t_values, std::optional<double> target) {
  const int n = static_cast<int>(t_values.size());
  VectorXd a(n);
  for (int i = 0; i < n; ++i) a(i) = std::expm1(t_values(i));
  const double amin = a.minCoeff(), amax = a.maxCoeff();
  const double tiny = 1e-14;
  if (amax <= tiny && amin >= -tiny) {
    return {target.value_or(0.0), true};
  }
  if (amax <= tiny || amin >= -tiny) {
    throw NoInteriorRoot(t_values.minCoeff(), t_values.maxCoeff(),
                         "solve_lambda: no sign change; t range [" +
                             std::to_string(t_values.minCoeff()) + ", " +
                             std::to_string(t_values.maxCoeff()) + "]");
  }

  // feasibility interval (lo, hi) with a relative inset
  double lo = -1.0 / amax, hi = -1.0 / amin;
  double L = lo + 1e-10 * (std::abs(lo) + 1e-300);
  double H = hi - 1e-10 * (std::abs(hi) + 1e-300);

  auto g = [&](double lam, double* dg = nullptr) {
    double s = 0.0, ds = 0.0;
    for (int i = 0; i < n; ++i) {
      double denom = 1.0 + lam * a(i);
      double r = a(i) / denom;
      s += r;
      ds -= r * r;
    }
    if (dg) *dg = ds;
    return s;
  };

  // g is strictly decreasing: g(L) > 0 > g(H)
  double lam = 0.0;
  if (!(lam > L && lam < H)) lam = 0.5 * (L + H);
  double best_lam = lam, best_abs = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    double dg;
    double val = g(lam, &dg);
    if (std::abs(val) < best_abs) {
      best_abs = std::abs(val);
      best_lam = lam;
    }
    if (val == 0.0) break;
    if (val > 0)
      L = lam;
    else
      H = lam;
    double step = -val / dg;  // dg < 0
    double next = lam + step;
    if (!(next > L && next < H)) next = 0.5 * (L + H);
    if (std::abs(next - lam) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                    (std::abs(lam) + 1e-300)) {
      lam = next;
      double v2 = g(lam);
      if (std::abs(v2) < best_abs) {
        best_abs = std::abs(v2);
        best_lam = lam;
      }
      break;
    }
    lam = next;
  }
  return {best_lam, false};
}

double ell1(int n1, int n2, double eta) {
  if (!(eta > 0.0 && eta < 1.0))
    throw std::invalid_argument("ell1: eta must lie in (0,1)");
  return n1 * std::log(eta) + n2 * std::log1p(-eta);
}

VectorXd el_weights_from_t(const VectorXd& t_values, double lambda) {
  const int n = static_cast<int>(t_values.size());
  VectorXd p(n);
  for (int i = 0; i < n; ++i) {
    double denom = 1.0 + lambda * std::expm1(t_values(i));
    if (!(denom > 0.0))
      throw std::invalid_argument("el_weights: infeasible lambda");
    p(i) = 1.0 / (n * denom);
  }
  return p;
}

VectorXd el_weights(const Theta& theta, double lambda, const Dataset& data,
                    const ModelSpec& spec) {
  ProfileLikelihood pl(data, spec);
  return el_weights_from_t(pl.t_values(theta), lambda);
}

double fhat_cdf(const VectorXd& point, const VectorXd& weights, const Dataset& data) {
  double s = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    if ((data.x.row(i).transpose().array() <= point.array()).all()) s += weights(i);
  }
  return s;
}

ProfileLikelihood::ProfileLikelihood(const Dataset& data, const ModelSpec& spec)
    : data_(&data), spec_(&spec) {
  data.validate();
  normal_ = spec.outcome.kind == Family::NormalBasis;
  const int n = data.n();
  Xp_.resize(n, spec.d_beta());
  for (int i = 0; i < n; ++i)
    Xp_.row(i) = spec.propensity_covariates(data.x.row(i).transpose()).transpose();
  for (int i = 0; i < n; ++i)
    if (data.d(i) == 1) obs_rows_.push_back(i);
  y_obs_.resize(obs_rows_.size());
  for (size_t k = 0; k < obs_rows_.size(); ++k) y_obs_(k) = data.y(obs_rows_[k]);
  if (normal_) {
    const auto& om = spec.outcome;
    Fm_.resize(n, om.d_mean());
    Flv_.resize(n, om.d_logvar());
    for (int i = 0; i < n; ++i) {
      Fm_.row(i) = om.mean_features(data.x.row(i).transpose()).transpose();
      Flv_.row(i) = om.logvar_features(data.x.row(i).transpose()).transpose();
    }
    Fm_obs_.resize(obs_rows_.size(), om.d_mean());
    Flv_obs_.resize(obs_rows_.size(), om.d_logvar());
    for (size_t k = 0; k < obs_rows_.size(); ++k) {
      Fm_obs_.row(k) = Fm_.row(obs_rows_[k]);
      Flv_obs_.row(k) = Flv_.row(obs_rows_[k]);
    }
  }
}

VectorXd ProfileLikelihood::t_values(const Theta& theta) const {
  const int n = data_->n();
  if (normal_) {
    const auto& om = spec_->outcome;
    VectorXd m = Fm_ * theta.xi.head(om.d_mean());
    VectorXd s2 = (Flv_ * theta.xi.segment(om.d_mean(), om.d_logvar()))
                      .array().exp().matrix();
    VectorXd t = Xp_ * theta.beta;
    t.array() += theta.alpha;
    t += theta.gamma * m + 0.5 * theta.gamma * theta.gamma * s2;
    return t;
  }
  VectorXd t(n);
  for (int i = 0; i < n; ++i)
    t(i) = t_fun(data_->x.row(i).transpose(), theta, *spec_);
  return t;
}

double ProfileLikelihood::h_value(const Theta& theta, double lambda) const {
  VectorXd t = t_values(theta);
  double val = 0.0;
  // observed-data log density
  if (normal_) {
    const auto& om = spec_->outcome;
    VectorXd m = Fm_obs_ * theta.xi.head(om.d_mean());
    VectorXd lv = Flv_obs_ * theta.xi.segment(om.d_mean(), om.d_logvar());
    Eigen::ArrayXd r = (y_obs_ - m).array();
    val += (-0.5 * std::log(2.0 * M_PI) * static_cast<double>(y_obs_.size())) -
           0.5 * lv.sum() - 0.5 * (r.square() * (-lv.array()).exp()).sum();
  } else {
    for (size_t k = 0; k < obs_rows_.size(); ++k)
      val += log_f(y_obs_(k), data_->x.row(obs_rows_[k]).transpose(), theta.xi,
                   spec_->outcome);
  }
  for (int i = 0; i < data_->n(); ++i) {
    if (data_->d(i) == 0) val += t(i);
    val -= log_denom(t(i), lambda);
  }
  return val;
}

VectorXd ProfileLikelihood::h_grad(const Theta& theta, double lambda) const {
  const int n = data_->n();
  VectorXd t = t_values(theta);
  VectorXd w(n);
  for (int i = 0; i < n; ++i)
    w(i) = (data_->d(i) == 0 ? 1.0 : 0.0) - q_frac(t(i), lambda);

  VectorXd g = VectorXd::Zero(spec_->d_theta());
  if (normal_) {
    const auto& om = spec_->outcome;
    const int dm = om.d_mean(), dv = om.d_logvar(), db = spec_->d_beta();
    VectorXd m = Fm_ * theta.xi.head(dm);
    VectorXd s2 = (Flv_ * theta.xi.segment(dm, dv)).array().exp().matrix();
    double gam = theta.gamma;
    g(0) = w.sum();
    g.segment(1, db) = Xp_.transpose() * w;
    g(1 + db) = w.dot(m + gam * s2);
    // xi blocks: tilt contribution through c plus observed-data scores
    VectorXd m_obs = Fm_obs_ * theta.xi.head(dm);
    VectorXd lv_obs = Flv_obs_ * theta.xi.segment(dm, dv);
    Eigen::ArrayXd r = (y_obs_ - m_obs).array();
    Eigen::ArrayXd inv_s2 = (-lv_obs.array()).exp();
    g.segment(2 + db, dm) =
        gam * (Fm_.transpose() * w) + Fm_obs_.transpose() * (r * inv_s2).matrix();
    g.tail(dv) = 0.5 * gam * gam * (Flv_.transpose() * (w.array() * s2.array()).matrix()) +
                 Flv_obs_.transpose() * (0.5 * (r.square() * inv_s2 - 1.0)).matrix();
    return g;
  }
  for (int i = 0; i < n; ++i)
    g += w(i) * grad_t(data_->x.row(i).transpose(), theta, *spec_);
  for (size_t k = 0; k < obs_rows_.size(); ++k)
    g.tail(spec_->outcome.dim_xi()) +=
        score_xi(y_obs_(k), data_->x.row(obs_rows_[k]).transpose(), theta.xi,
                 spec_->outcome);
  return g;
}

double ProfileLikelihood::ell2(const Theta& theta, LambdaResult* lam_out) const {
  VectorXd t = t_values(theta);
  LambdaResult lam = solve_lambda(t);
  if (lam_out) *lam_out = lam;
  return h_value(theta, lam.lambda);
}

VectorXd ProfileLikelihood::ell2_grad(const Theta& theta) const {
  // envelope theorem: d ell2/d theta = dh/d theta at lambda_theta, because
  // dh/d lambda vanishes there
  LambdaResult lam = solve_lambda(t_values(theta));
  return h_grad(theta, lam.lambda);
}

ELState ProfileLikelihood::state(const Theta& theta) const {
  ELState st;
  st.t_values = t_values(theta);
  LambdaResult lam = solve_lambda(st.t_values);
  st.lambda = lam.lambda;
  st.degenerate = lam.degenerate;
  st.weights = el_weights_from_t(st.t_values, st.lambda);
  st.ell2 = h_value(theta, st.lambda);
  double eta = static_cast<double>(data_->n1()) / data_->n();
  st.ell1 = mnar::ell1(data_->n1(), data_->n2(), eta);
  return st;
}

double ell2(const Theta& theta, const Dataset& data, const ModelSpec& spec) {
  ProfileLikelihood pl(data, spec);
  return pl.ell2(theta);
}

}  // namespace mnar
