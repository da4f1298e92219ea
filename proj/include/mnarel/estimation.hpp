#pragma once

#include <optional>

#include "mnarel/likelihood.hpp"

namespace mnar {

struct FitOptions {
  int multistarts = 5;
  double tol = 1e-6;        // gradient infinity-norm target
  int max_iter = 200;
  std::uint64_t seed = 0;   // multistart perturbation stream
  std::optional<Theta> init;        // overrides the default initializer
  std::optional<Theta> warm_start;  // tried first, e.g. bootstrap refits
};

struct FitResult {
  Theta theta_hat;
  double eta_hat = 0.0;     // n1/n
  double lambda_hat = 0.0;
  double ell1 = 0.0;
  double ell2 = 0.0;
  VectorXd weights;
  std::optional<MatrixXd> theta_cov;  // V^-1 - {eta(1-eta)}^-1 e1 e1'
  std::optional<MatrixXd> vhat;
  double mu_hat = 0.0;
  double sigma2_hat = 0.0;  // asymptotic variance of sqrt(n)(mu_hat - mu)
  double mu_se = 0.0;       // sqrt(sigma2_hat / n)
  bool converged = false;
  bool singular_vhat = false;
  double grad_norm = 0.0;
  int iterations = 0;
  int multistart_index = 0;
};

enum class MuRoute { ClosedForm, Quadrature };

// Outer maximization of ell2 over theta (eta profiles out to n1/n).
FitResult fit_mle(const Dataset& data, const ModelSpec& spec,
                  const FitOptions& options = {});

// K(x; theta, eta) of the mean decomposition: the conditional mean of Y
// given X = x under the fitted missingness mechanism.
double K_fun(const VectorXd& x, const Theta& theta, double eta,
             const ModelSpec& spec, MuRoute route = MuRoute::ClosedForm);

// mu_hat = n^-1 sum_i K(x_i; theta_hat, eta_hat).
double mu_hat(const FitResult& fit, const Dataset& data, const ModelSpec& spec,
              MuRoute route = MuRoute::ClosedForm);

// Gradient of K in theta (analytic for NormalBasis, FD otherwise).
VectorXd grad_K(const VectorXd& x, const Theta& theta, double eta,
                const ModelSpec& spec);

// Plug-in sandwich variance: Var{K} + A' V^-1 A.
double sigma2_hat(const FitResult& fit, const Dataset& data, const ModelSpec& spec);

// R(theta0) = 2 {ell2(theta_hat) - ell2(theta0)}; +inf when theta0 is
// EL-infeasible.
double lr_stat(const Theta& theta0, const Dataset& data, const ModelSpec& spec,
               const FitResult& fit);

// BIC of the full likelihood ell1 + ell2 with k = d_theta + 1 parameters.
double bic(const FitResult& fit, const Dataset& data);

}  // namespace mnar
