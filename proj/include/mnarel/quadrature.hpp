#pragma once

#include <Eigen/Dense>

namespace mnar {

// Gauss-Hermite rule for the weight exp(-x^2) on (-inf, inf).
// log_weights are stored because the raw weights underflow for large n.
struct GaussHermite {
  Eigen::VectorXd nodes;
  Eigen::VectorXd log_weights;

  explicit GaussHermite(int n);

  // Shared 64-node rule used throughout.
  static const GaussHermite& standard();
};

}  // namespace mnar
