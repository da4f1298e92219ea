#pragma once

#include <stdexcept>

#include "mnarel/model.hpp"

namespace mnar {

class NoInteriorRoot : public std::runtime_error {
 public:
  NoInteriorRoot(double t_min, double t_max, const std::string& msg)
      : std::runtime_error(msg), t_min(t_min), t_max(t_max) {}
  double t_min, t_max;
};

struct LambdaResult {
  double lambda = 0.0;
  bool degenerate = false;  // all t values ~ 0
};

// Solve sum_i (w_i - 1) / (1 + lambda (w_i - 1)) = 0 with w_i = exp(t_i)
// inside the feasibility interval {lambda : 1 + lambda (w_i - 1) > 0}.
// The left side is strictly decreasing, so the root is unique; safeguarded
// Newton with a bisection fallback.  Degenerate inputs (all w_i = 1) return
// `target` when supplied, else 0.
LambdaResult solve_lambda(const VectorXd& t_values,
                          std::optional<double> target = std::nullopt);

// ell1(eta) = n1 log(eta) + n2 log(1 - eta).
double ell1(int n1, int n2, double eta);

// p_i = n^{-1} / (1 + lambda [exp(t_i) - 1]).
VectorXd el_weights_from_t(const VectorXd& t_values, double lambda);
VectorXd el_weights(const Theta& theta, double lambda, const Dataset& data,
                    const ModelSpec& spec);

// F_hat(x|D=1) = sum_i p_i I(x_i <= x), elementwise inequality.
double fhat_cdf(const VectorXd& point, const VectorXd& weights, const Dataset& data);

struct ELState {
  double lambda = 0.0;
  VectorXd t_values;
  VectorXd weights;
  double ell1 = 0.0;
  double ell2 = 0.0;
  bool degenerate = false;
};

// Evaluation engine for the profile likelihood.  Caches the basis feature
// matrices of a dataset so repeated (theta, lambda) evaluations reduce to
// dense linear algebra.  For GenericDensity models it falls back to the
// per-row c_fun path.
class ProfileLikelihood {
 public:
  ProfileLikelihood(const Dataset& data, const ModelSpec& spec);

  const Dataset& data() const { return *data_; }
  const ModelSpec& spec() const { return *spec_; }

  VectorXd t_values(const Theta& theta) const;

  // h(theta, lambda): ell2 with the multiplier frozen at `lambda`.
  double h_value(const Theta& theta, double lambda) const;
  VectorXd h_grad(const Theta& theta, double lambda) const;

  // Profile ell2(theta) = h(theta, lambda_theta); throws NoInteriorRoot when
  // theta is outside the EL-feasible region.
  double ell2(const Theta& theta, LambdaResult* lam_out = nullptr) const;
  // Envelope gradient: d ell2 / d theta = h_grad at lambda_theta.
  VectorXd ell2_grad(const Theta& theta) const;

  ELState state(const Theta& theta) const;

 private:
  const Dataset* data_;
  const ModelSpec* spec_;
  bool normal_;
  MatrixXd Fm_, Flv_, Xp_;       // n x d_mean, n x d_logvar, n x d_beta
  std::vector<int> obs_rows_;    // rows with d = 1
  VectorXd y_obs_;
  MatrixXd Fm_obs_, Flv_obs_;

  friend class GradientCheck;
};

// ell2 as a free function matching the operation signature.
double ell2(const Theta& theta, const Dataset& data, const ModelSpec& spec);

}  // namespace mnar
