#pragma once

#include <Eigen/Dense>
#include <functional>

namespace mnar {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Objective callback: returns f(x) and fills grad when non-null.
using Objective = std::function<double(const VectorXd& x, VectorXd* grad)>;

struct OptimResult {
  VectorXd x;
  double f = 0.0;
  VectorXd grad;
  int iterations = 0;
  bool converged = false;
};

// BFGS minimizer with backtracking Armijo line search.  Converges when the
// gradient infinity-norm drops below `tol`.
OptimResult bfgs_minimize(const Objective& fn, const VectorXd& x0, double tol,
                          int max_iter);

// Damped-Newton polish on top of a BFGS solution; Hessian from central
// finite differences of the analytic gradient.  Cheap for the small
// parameter dimensions here and drives the gradient to ~1e-8.
OptimResult newton_polish(const Objective& fn, const VectorXd& x0, double tol,
                          int max_iter);

// IRLS logistic regression of a binary outcome on X (no implicit intercept;
// prepend a ones column if one is wanted).
VectorXd logistic_fit(const MatrixXd& X, const Eigen::VectorXi& z,
                      int max_iter = 50);

// Least squares via QR.
VectorXd ols(const MatrixXd& X, const VectorXd& y);

}  // namespace mnar
