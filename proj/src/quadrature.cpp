#include "mnarel/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace mnar {

// Newton iteration on the physicists' Hermite recurrence; nodes come out in
// decreasing order, then get mirrored.  Weights are formed in log space from
// the derivative value to stay finite for n >= 40.
GaussHermite::GaussHermite(int n) {
  if (n < 1) throw std::invalid_argument("GaussHermite: n must be positive");
  nodes.resize(n);
  log_weights.resize(n);

  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    // initial guesses, Numerical-Recipes style
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * nodes(0);
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * nodes(1);
    } else {
      z = 2.0 * z - nodes(i - 2);
    }

    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // orthonormal Hermite recurrence: p1 = H~_n(z), pp = H~_n'(z)
      double p1 = 1.0 / std::pow(M_PI, 0.25);
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
             std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15 * (1.0 + std::abs(z))) break;
    }
    nodes(i) = z;
    nodes(n - 1 - i) = -z;
    // w = 2 / pp^2 with pp the orthonormal derivative
    double lw = std::log(2.0) - 2.0 * std::log(std::abs(pp));
    log_weights(i) = lw;
    log_weights(n - 1 - i) = lw;
  }
}

const GaussHermite& GaussHermite::standard() {
  static const GaussHermite rule(64);
  return rule;
}

}  // namespace mnar
