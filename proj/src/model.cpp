#include "mnarel/model.hpp"

#include <cmath>
#include <limits>

#include "mnarel/quadrature.hpp"

namespace mnar {

Feature feature_const() {
  Feature f;
  f.name = "1";
  return f;
}

Feature feature_pow(int col, int p, const std::string& name) {
  Feature f;
  f.name = name;
  f.powers = {{col, p}};
  return f;
}

VectorXd OutcomeModel::mean_features(const VectorXd& x) const {
  VectorXd v(d_mean());
  for (int j = 0; j < d_mean(); ++j) v(j) = mean_basis[j](x);
  return v;
}

VectorXd OutcomeModel::logvar_features(const VectorXd& x) const {
  VectorXd v(d_logvar());
  for (int j = 0; j < d_logvar(); ++j) v(j) = logvar_basis[j](x);
  return v;
}

double OutcomeModel::mean(const VectorXd& x, const VectorXd& xi) const {
  return mean_features(x).dot(xi.head(d_mean()));
}

double OutcomeModel::variance(const VectorXd& x, const VectorXd& xi) const {
  return std::exp(logvar_features(x).dot(xi.segment(d_mean(), d_logvar())));
}

VectorXd Theta::pack() const {
  VectorXd v(dim());
  v(0) = alpha;
  v.segment(1, beta.size()) = beta;
  v(1 + beta.size()) = gamma;
  v.tail(xi.size()) = xi;
  return v;
}

Theta Theta::unpack(const VectorXd& v, int d_beta, int d_xi) {
  if (v.size() != 2 + d_beta + d_xi)
    throw std::invalid_argument("Theta::unpack: dimension mismatch");
  Theta th;
  th.alpha = v(0);
  th.beta = v.segment(1, d_beta);
  th.gamma = v(1 + d_beta);
  th.xi = v.tail(d_xi);
  return th;
}

VectorXd ModelSpec::propensity_covariates(const VectorXd& x) const {
  VectorXd v(propensity.size());
  for (size_t j = 0; j < propensity.size(); ++j) v(j) = x(propensity[j]);
  return v;
}

void Dataset::validate() const {
  if (n1() < 1 || n2() < 1)
    throw std::invalid_argument("Dataset: need at least one observed and one missing row");
  for (int i = 0; i < n(); ++i) {
    if (d(i) == 1 && !std::isfinite(y(i)))
      throw std::invalid_argument("Dataset: y missing on a row with d=1");
  }
}

double c_fun(const VectorXd& x, double gamma, const VectorXd& xi,
             const OutcomeModel& model) {
  if (gamma == 0.0) return 0.0;
  if (model.kind == Family::NormalBasis) {
    double m = model.mean(x, xi);
    double s2 = model.variance(x, xi);
    double c = gamma * m + 0.5 * gamma * gamma * s2;
    if (!std::isfinite(c)) throw CFunDivergence(x, "c_fun: non-finite closed form");
    return c;
  }
  const auto& gh = GaussHermite::standard();
  double loc = model.location_hint ? model.location_hint(x, xi) : 0.0;
  double scale = model.scale_hint ? model.scale_hint(x, xi) : 1.0;
  const double sq2s = std::sqrt(2.0) * scale;
  double mx = -std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(gh.nodes.size());
  VectorXd lg(n);
  for (int k = 0; k < n; ++k) {
    double yk = loc + sq2s * gh.nodes(k);
    lg(k) = gh.log_weights(k) + gh.nodes(k) * gh.nodes(k) + gamma * yk +
            model.log_density(yk, x, xi);
    mx = std::max(mx, lg(k));
  }
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += std::exp(lg(k) - mx);
  double c = mx + std::log(s) + std::log(sq2s);
  if (!std::isfinite(c)) throw CFunDivergence(x, "c_fun: tilted integral diverged");
  return c;
}

double t_fun(const VectorXd& x, const Theta& theta, const ModelSpec& spec) {
  return theta.alpha + spec.propensity_covariates(x).dot(theta.beta) +
         c_fun(x, theta.gamma, theta.xi, spec.outcome);
}

double propensity_from_t(double t, double eta) {
  if (!(eta > 0.0 && eta < 1.0))
    throw std::invalid_argument("propensity: eta must lie in (0,1)");
  double a = std::log1p(-eta) + t;  // log{(1-eta) e^t}
  double b = std::log(eta);
  double m = std::max(a, b);
  double ea = std::exp(a - m), eb = std::exp(b - m);
  return ea / (ea + eb);
}

double propensity_marginal(const VectorXd& x, const Theta& theta, double eta,
                           const ModelSpec& spec) {
  return propensity_from_t(t_fun(x, theta, spec), eta);
}

double alpha_star(const Theta& theta, double eta) {
  if (!(eta > 0.0 && eta < 1.0))
    throw std::invalid_argument("alpha_star: eta must lie in (0,1)");
  return theta.alpha - std::log(eta / (1.0 - eta));
}

double log_f(double y, const VectorXd& x, const VectorXd& xi,
             const OutcomeModel& model) {
  if (model.kind == Family::GenericDensity) return model.log_density(y, x, xi);
  double m = model.mean(x, xi);
  double lv = model.logvar_features(x).dot(xi.segment(model.d_mean(), model.d_logvar()));
  double r = y - m;
  return -0.5 * std::log(2.0 * M_PI) - 0.5 * lv - 0.5 * r * r * std::exp(-lv);
}

VectorXd score_xi(double y, const VectorXd& x, const VectorXd& xi,
                  const OutcomeModel& model) {
  if (model.kind == Family::NormalBasis) {
    VectorXd mf = model.mean_features(x);
    VectorXd lvf = model.logvar_features(x);
    double m = mf.dot(xi.head(model.d_mean()));
    double s2 = std::exp(lvf.dot(xi.segment(model.d_mean(), model.d_logvar())));
    double r = y - m;
    VectorXd g(model.dim_xi());
    g.head(model.d_mean()) = (r / s2) * mf;
    g.tail(model.d_logvar()) = 0.5 * (r * r / s2 - 1.0) * lvf;
    return g;
  }
  VectorXd g(xi.size());
  VectorXd xp = xi;
  for (int j = 0; j < xi.size(); ++j) {
    double h = 1e-6 * (1.0 + std::abs(xi(j)));
    xp(j) = xi(j) + h;
    double up = model.log_density(y, x, xp);
    xp(j) = xi(j) - h;
    double dn = model.log_density(y, x, xp);
    xp(j) = xi(j);
    g(j) = (up - dn) / (2.0 * h);
  }
  return g;
}

VectorXd grad_t(const VectorXd& x, const Theta& theta, const ModelSpec& spec) {
  const OutcomeModel& model = spec.outcome;
  VectorXd g(spec.d_theta());
  g(0) = 1.0;
  g.segment(1, spec.d_beta()) = spec.propensity_covariates(x);
  int kg = 1 + spec.d_beta();
  if (model.kind == Family::NormalBasis) {
    VectorXd mf = model.mean_features(x);
    VectorXd lvf = model.logvar_features(x);
    double m = mf.dot(theta.xi.head(model.d_mean()));
    double s2 = std::exp(lvf.dot(theta.xi.segment(model.d_mean(), model.d_logvar())));
    double gam = theta.gamma;
    g(kg) = m + gam * s2;
    g.segment(kg + 1, model.d_mean()) = gam * mf;
    g.tail(model.d_logvar()) = 0.5 * gam * gam * s2 * lvf;
    return g;
  }
  // GenericDensity: central differences on c in (gamma, xi)
  double hg = 1e-6 * (1.0 + std::abs(theta.gamma));
  g(kg) = (c_fun(x, theta.gamma + hg, theta.xi, model) -
           c_fun(x, theta.gamma - hg, theta.xi, model)) /
          (2.0 * hg);
  VectorXd xp = theta.xi;
  for (int j = 0; j < theta.xi.size(); ++j) {
    double h = 1e-6 * (1.0 + std::abs(theta.xi(j)));
    xp(j) = theta.xi(j) + h;
    double up = c_fun(x, theta.gamma, xp, model);
    xp(j) = theta.xi(j) - h;
    double dn = c_fun(x, theta.gamma, xp, model);
    xp(j) = theta.xi(j);
    g(kg + 1 + j) = (up - dn) / (2.0 * h);
  }
  return g;
}

double tilted_outcome_sampler(const VectorXd& x, const Theta& theta,
                              const ModelSpec& spec, std::mt19937_64& rng) {
  const OutcomeModel& model = spec.outcome;
  if (model.kind == Family::NormalBasis) {
    double m = model.mean(x, theta.xi);
    double s2 = model.variance(x, theta.xi);
    std::normal_distribution<double> nd(m + theta.gamma * s2, std::sqrt(s2));
    return nd(rng);
  }
  if (!model.envelope_sampler || !model.envelope_log_density)
    throw std::invalid_argument("tilted_outcome_sampler: GenericDensity needs an envelope");
  double c = c_fun(x, theta.gamma, theta.xi, model);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (long k = 0; k < 1000000; ++k) {
    double y = model.envelope_sampler(rng);
    double log_ratio = theta.gamma * y + model.log_density(y, x, theta.xi) - c -
                       model.envelope_log_density(y) - model.envelope_log_bound;
    if (std::log(unif(rng)) < log_ratio) return y;
  }
  throw std::runtime_error("tilted_outcome_sampler: envelope exhausted after 1e6 proposals");
}

}  // namespace mnar
