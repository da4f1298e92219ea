#include "mnarel/optim.hpp"

#include <cmath>
#include <limits>

namespace mnar {

OptimResult bfgs_minimize(const Objective& fn, const VectorXd& x0, double tol,
                          int max_iter) {
  const int d = static_cast<int>(x0.size());
  OptimResult res;
  res.x = x0;
  res.grad.resize(d);
  res.f = fn(res.x, &res.grad);
  MatrixXd H = MatrixXd::Identity(d, d);

  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it;
    if (res.grad.lpNorm<Eigen::Infinity>() < tol) {
      res.converged = true;
      return res;
    }
    VectorXd p = -H * res.grad;
    double gp = res.grad.dot(p);
    if (!(gp < 0)) {  // reset on a non-descent direction
      H.setIdentity();
      p = -res.grad;
      gp = res.grad.dot(p);
    }

    double step = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    VectorXd x_new, g_new(d);
    bool ok = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = res.x + step * p;
      f_new = fn(x_new, &g_new);
      if (std::isfinite(f_new) && f_new <= res.f + 1e-4 * step * gp) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) break;  // line search stalled; gradient may already be tiny

    VectorXd s = x_new - res.x;
    VectorXd yv = g_new - res.grad;
    double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      // BFGS inverse update
      VectorXd Hy = H * yv;
      double yHy = yv.dot(Hy);
      H += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
           (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }
    res.x = x_new;
    res.f = f_new;
    res.grad = g_new;
  }
  res.converged = res.grad.lpNorm<Eigen::Infinity>() < tol;
  return res;
}

OptimResult newton_polish(const Objective& fn, const VectorXd& x0, double tol,
                          int max_iter) {
  const int d = static_cast<int>(x0.size());
  OptimResult res;
  res.x = x0;
  res.grad.resize(d);
  res.f = fn(res.x, &res.grad);

  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it;
    if (res.grad.lpNorm<Eigen::Infinity>() < tol) {
      res.converged = true;
      return res;
    }
    // FD Hessian of the gradient, symmetrized
    MatrixXd Hess(d, d);
    VectorXd gp(d), gm(d), xp = res.x;
    for (int j = 0; j < d; ++j) {
      double h = 1e-6 * (1.0 + std::abs(res.x(j)));
      xp(j) = res.x(j) + h;
      fn(xp, &gp);
      xp(j) = res.x(j) - h;
      fn(xp, &gm);
      xp(j) = res.x(j);
      Hess.col(j) = (gp - gm) / (2.0 * h);
    }
    Hess = 0.5 * (Hess + Hess.transpose()).eval();

    // Levenberg damping until the step is a descent direction that improves f
    double mu = 0.0;
    bool moved = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      MatrixXd Hd = Hess + mu * MatrixXd::Identity(d, d);
      Eigen::LDLT<MatrixXd> ldlt(Hd);
      VectorXd step = ldlt.solve(-res.grad);
      if (ldlt.info() == Eigen::Success && res.grad.dot(step) < 0) {
        double alpha = 1.0;
        for (int ls = 0; ls < 30; ++ls) {
          VectorXd x_new = res.x + alpha * step;
          VectorXd g_new(d);
          double f_new = fn(x_new, &g_new);
          if (std::isfinite(f_new) &&
              (f_new < res.f ||
               (f_new <= res.f + 1e-12 * (std::abs(res.f) + 1.0) &&
                g_new.lpNorm<Eigen::Infinity>() <
                    res.grad.lpNorm<Eigen::Infinity>()))) {
            res.x = x_new;
            res.f = f_new;
            res.grad = g_new;
            moved = true;
            break;
          }
          alpha *= 0.5;
        }
        if (moved) break;
      }
      mu = (mu == 0.0) ? 1e-6 * (1.0 + Hess.diagonal().cwiseAbs().maxCoeff())
                       : mu * 10.0;
    }
    if (!moved) break;
  }
  res.converged = res.grad.lpNorm<Eigen::Infinity>() < tol;
  return res;
}

VectorXd logistic_fit(const MatrixXd& X, const Eigen::VectorXi& z, int max_iter) {
  const int d = static_cast<int>(X.cols());
  VectorXd b = VectorXd::Zero(d);
  for (int it = 0; it < max_iter; ++it) {
    VectorXd eta = X * b;
    VectorXd p = eta.unaryExpr([](double v) {
      return v > 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    });
    VectorXd w = p.array() * (1.0 - p.array());
    VectorXd g = X.transpose() * (z.cast<double>() - p);
    MatrixXd Hm = X.transpose() * w.asDiagonal() * X;
    Hm.diagonal().array() += 1e-10;
    VectorXd step = Hm.ldlt().solve(g);
    b += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-10) break;
  }
  return b;
}

VectorXd ols(const MatrixXd& X, const VectorXd& y) {
  return X.colPivHouseholderQr().solve(y);
}

}  // namespace mnar
