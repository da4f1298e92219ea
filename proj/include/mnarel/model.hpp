#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mnar {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

// A basis feature over the covariate vector.  Monomial features keep their
// (column, exponent) structure so identifiability checks can inspect them;
// custom features carry only a callable.
struct Feature {
  std::string name;
  std::vector<std::pair<int, int>> powers;  // empty => constant 1
  std::function<double(const VectorXd&)> fn;  // set for custom features
  std::vector<int> custom_depends;  // columns a custom feature reads

  double operator()(const VectorXd& x) const {
    if (fn) return fn(x);
    double v = 1.0;
    for (auto [col, p] : powers) {
      double b = x(col);
      for (int k = 0; k < p; ++k) v *= b;
    }
    return v;
  }
  bool is_custom() const { return static_cast<bool>(fn); }
  bool is_constant() const { return !fn && powers.empty(); }
  int degree() const {
    int d = 0;
    for (auto [col, p] : powers) d += p;
    return d;
  }
  bool depends_on(int col) const {
    if (fn) {
      for (int c : custom_depends)
        if (c == col) return true;
      return false;
    }
    for (auto [c, p] : powers)
      if (c == col && p > 0) return true;
    return false;
  }
};

// Constant feature, single column x_c, and power x_c^p helpers.
Feature feature_const();
Feature feature_pow(int col, int p, const std::string& name);

enum class Family { NormalBasis, GenericDensity };

// Parametric outcome family f(y|x, xi).  NormalBasis: N(mu, sigma^2) with
// mu = <mean_basis(x), xi_mean> and sigma^2 = exp<logvar_basis(x), xi_var>.
// GenericDensity: user log-density plus a location/scale hint used to
// standardize the tilted integral before Gauss-Hermite quadrature.
struct OutcomeModel {
  Family kind = Family::NormalBasis;
  std::vector<Feature> mean_basis;
  std::vector<Feature> logvar_basis;

  // GenericDensity only
  std::function<double(double y, const VectorXd& x, const VectorXd& xi)> log_density;
  std::function<double(const VectorXd& x, const VectorXd& xi)> location_hint;
  std::function<double(const VectorXd& x, const VectorXd& xi)> scale_hint;
  // optional accept-reject envelope for the tilted sampler
  std::function<double(std::mt19937_64&)> envelope_sampler;
  std::function<double(double)> envelope_log_density;
  double envelope_log_bound = 0.0;

  int dim_xi() const {
    return kind == Family::NormalBasis
               ? static_cast<int>(mean_basis.size() + logvar_basis.size())
               : generic_dim_xi;
  }
  int generic_dim_xi = 0;

  int d_mean() const { return static_cast<int>(mean_basis.size()); }
  int d_logvar() const { return static_cast<int>(logvar_basis.size()); }

  VectorXd mean_features(const VectorXd& x) const;
  VectorXd logvar_features(const VectorXd& x) const;
  double mean(const VectorXd& x, const VectorXd& xi) const;
  double variance(const VectorXd& x, const VectorXd& xi) const;
};

// theta = (alpha, beta, gamma, xi); packed in that order, alpha first.
struct Theta {
  double alpha = 0.0;
  VectorXd beta;
  double gamma = 0.0;
  VectorXd xi;

  int dim() const { return 2 + static_cast<int>(beta.size() + xi.size()); }
  VectorXd pack() const;
  static Theta unpack(const VectorXd& v, int d_beta, int d_xi);
};

// Model specification binding covariate columns, the propensity covariate
// subset, and the outcome family.
struct ModelSpec {
  std::vector<std::string> columns;
  std::vector<int> propensity;  // covariate columns entering the propensity
  OutcomeModel outcome;
  std::optional<int> instrument;

  int d_beta() const { return static_cast<int>(propensity.size()); }
  int d_theta() const { return 2 + d_beta() + outcome.dim_xi(); }
  VectorXd propensity_covariates(const VectorXd& x) const;
};

struct Dataset {
  MatrixXd x;   // n x d_x
  VectorXi d;   // 1 = response observed
  VectorXd y;   // meaningful where d = 1 (NaN elsewhere)
  std::optional<VectorXd> y_full;  // pre-mask responses (simulation only)

  int n() const { return static_cast<int>(d.size()); }
  int n1() const { return d.sum(); }
  int n2() const { return n() - n1(); }
  void validate() const;  // throws on degenerate counts / missing y
};

class CFunDivergence : public std::domain_error {
 public:
  CFunDivergence(const VectorXd& x, const std::string& msg)
      : std::domain_error(msg), offending_x(x) {}
  VectorXd offending_x;
};

// c(x, gamma, xi) = ln ∫ exp(gamma*y) f(y|x, xi) dy.
// Closed form for NormalBasis, 64-node Gauss-Hermite otherwise.
double c_fun(const VectorXd& x, double gamma, const VectorXd& xi,
             const OutcomeModel& model);

// t(x, theta) = alpha + x_p' beta + c(x, gamma, xi).
double t_fun(const VectorXd& x, const Theta& theta, const ModelSpec& spec);

// pi(x; theta, eta) = (1-eta) e^t / (eta + (1-eta) e^t) = pr(D=0 | X=x).
double propensity_marginal(const VectorXd& x, const Theta& theta, double eta,
                           const ModelSpec& spec);
double propensity_from_t(double t, double eta);

// alpha* = alpha - log{eta/(1-eta)}, the conditional-propensity intercept.
double alpha_star(const Theta& theta, double eta);

double log_f(double y, const VectorXd& x, const VectorXd& xi,
             const OutcomeModel& model);

// Score of log f in xi; analytic for NormalBasis, central differences else.
VectorXd score_xi(double y, const VectorXd& x, const VectorXd& xi,
                  const OutcomeModel& model);

// (1, x_p', dc/dgamma, dc/dxi')'.
VectorXd grad_t(const VectorXd& x, const Theta& theta, const ModelSpec& spec);

// Draw from pr(y|x, D=0) = exp{gamma*y - c} f(y|x, xi).
double tilted_outcome_sampler(const VectorXd& x, const Theta& theta,
                              const ModelSpec& spec, std::mt19937_64& rng);

}  // namespace mnar
