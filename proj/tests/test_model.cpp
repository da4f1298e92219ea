#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mnarel/model.hpp"
#include "mnarel/quadrature.hpp"
#include "mnarel/rng.hpp"

using namespace mnar;

namespace {

// Example-2-shaped spec: mean {1, z, u}, logvar {1}, propensity {u}.
ModelSpec toy_spec() {
  ModelSpec spec;
  spec.columns = {"z", "u"};
  spec.propensity = {1};
  spec.outcome.kind = Family::NormalBasis;
  spec.outcome.mean_basis = {feature_const(), feature_pow(0, 1, "z"),
                             feature_pow(1, 1, "u")};
  spec.outcome.logvar_basis = {feature_const()};
  return spec;
}

Theta toy_theta() {
  Theta th;
  th.alpha = -0.6;
  th.beta = VectorXd::Constant(1, -0.4);
  th.gamma = 0.5;
  th.xi.resize(4);
  th.xi << 2.5, 1.5, -1.0, 0.3;
  return th;
}

// Independent oracle: log ∫ e^{gamma y} f(y|x) dy by direct Gauss-Hermite.
double c_oracle(double mean, double var, double gamma) {
  const GaussHermite& gh = GaussHermite::standard();
  double s = 0.0;
  for (int k = 0; k < gh.nodes.size(); ++k) {
    double y = mean + std::sqrt(2.0 * var) * gh.nodes(k);
    s += std::exp(gh.log_weights(k) + gamma * y);
  }
  return std::log(s / std::sqrt(M_PI));
}

}  // namespace

TEST_CASE("features") {
  Feature c = feature_const();
  Feature x2 = feature_pow(0, 2, "x^2");
  VectorXd x(1);
  x << 3.0;
  CHECK(c(x) == 1.0);
  CHECK(x2(x) == 9.0);
  CHECK(c.is_constant());
  CHECK(c.degree() == 0);
  CHECK(x2.degree() == 2);
  CHECK(x2.depends_on(0));
  CHECK(!x2.depends_on(1));
  CHECK(!x2.is_custom());

  Feature f;
  f.name = "exp(x)";
  f.fn = [](const VectorXd& v) { return std::exp(v(0)); };
  f.custom_depends = {0};
  CHECK(f.is_custom());
  CHECK(f.depends_on(0));
  CHECK(f(x) == doctest::Approx(std::exp(3.0)));
}

TEST_CASE("theta pack round trip") {
  Theta th = toy_theta();
  VectorXd v = th.pack();
  CHECK(v.size() == th.dim());
  CHECK(v(0) == th.alpha);  // alpha first (e1 convention)
  Theta back = Theta::unpack(v, 1, 4);
  CHECK(back.alpha == th.alpha);
  CHECK(back.beta(0) == th.beta(0));
  CHECK(back.gamma == th.gamma);
  CHECK((back.xi - th.xi).norm() == 0.0);
}

TEST_CASE("c_fun closed form") {
  ModelSpec spec = toy_spec();
  Theta th = toy_theta();
  VectorXd x(2);
  x << 0.7, 1.2;
  double mean = 2.5 + 1.5 * 0.7 - 1.2;
  double var = std::exp(0.3);
  double c = c_fun(x, th.gamma, th.xi, spec.outcome);
  CHECK(c == doctest::Approx(th.gamma * mean + 0.5 * th.gamma * th.gamma * var)
                 .epsilon(1e-12));
  CHECK(c_fun(x, 0.0, th.xi, spec.outcome) == 0.0);
  // N(0,1), gamma = 1 => log E[e^Y] = 1/2
  Theta std_th;
  std_th.xi.resize(4);
  std_th.xi << 0.0, 0.0, 0.0, 0.0;
  VectorXd x0(2);
  x0 << 0.0, 0.0;
  CHECK(c_fun(x0, 1.0, std_th.xi, spec.outcome) == doctest::Approx(0.5).epsilon(1e-12));

  // mu = 1, sigma^2 = 2, gamma = 0.5 => 0.5 + 0.25 = 0.75
  VectorXd xi(4);
  xi << 1.0, 0.0, 0.0, std::log(2.0);
  CHECK(c_fun(x0, 0.5, xi, spec.outcome) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("t_fun composition oracle") {
  // alpha = -1, beta = (0.5), x_p = 2, mu = 1, sigma^2 = 2, gamma = 0.5
  ModelSpec spec;
  spec.columns = {"x"};
  spec.propensity = {0};
  spec.outcome.mean_basis = {feature_const()};
  spec.outcome.logvar_basis = {feature_const()};
  Theta th;
  th.alpha = -1.0;
  th.beta = VectorXd::Constant(1, 0.5);
  th.gamma = 0.5;
  th.xi.resize(2);
  th.xi << 1.0, std::log(2.0);
  VectorXd x = VectorXd::Constant(1, 2.0);
  CHECK(t_fun(x, th, spec) == doctest::Approx(0.75).epsilon(1e-12));

  Theta zero;
  zero.beta = VectorXd::Zero(1);
  zero.xi = th.xi;
  CHECK(t_fun(x, zero, spec) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("c_fun closed form matches quadrature oracle") {
  ModelSpec spec = toy_spec();
  Theta th = toy_theta();
  auto rng = substream(5, 0);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd x(2);
    x << nd(rng), nd(rng);
    double gamma = 0.8 * nd(rng);
    double mean = spec.outcome.mean(x, th.xi);
    double var = spec.outcome.variance(x, th.xi);
    double closed = c_fun(x, gamma, th.xi, spec.outcome);
    double oracle = c_oracle(mean, var, gamma);
    CHECK(std::abs(closed - oracle) <= 1e-8 * (1.0 + std::abs(oracle)));
  }
}

TEST_CASE("t_fun and propensity") {
  ModelSpec spec = toy_spec();
  Theta th = toy_theta();
  VectorXd x(2);
  x << 0.2, 0.9;
  double c = c_fun(x, th.gamma, th.xi, spec.outcome);
  double t = t_fun(x, th, spec);
  CHECK(t == doctest::Approx(th.alpha - 0.4 * 0.9 + c).epsilon(1e-14));

  // t = 0 gives pi = 1 - eta; extreme t saturates
  CHECK(propensity_from_t(0.0, 0.7) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(propensity_from_t(-800.0, 0.7) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(propensity_from_t(800.0, 0.7) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(propensity_marginal(x, th, 0.7, spec) ==
        doctest::Approx(propensity_from_t(t, 0.7)).epsilon(1e-14));
}

TEST_CASE("alpha_star") {
  Theta th = toy_theta();
  th.alpha = -0.5;
  CHECK(alpha_star(th, 0.7) ==
        doctest::Approx(-0.5 - std::log(0.7 / 0.3)).epsilon(1e-14));
  CHECK(alpha_star(th, 0.5) == doctest::Approx(-0.5).epsilon(1e-14));
  th.alpha = 0.3;
  CHECK(alpha_star(th, 0.75) ==
        doctest::Approx(0.3 - std::log(3.0)).epsilon(1e-14));  // ~ -0.7986
}

TEST_CASE("log_f normal") {
  ModelSpec spec = toy_spec();
  VectorXd xi(4);
  xi << 0.0, 0.0, 0.0, 0.0;
  VectorXd x0(2);
  x0 << 0.0, 0.0;
  CHECK(log_f(0.0, x0, xi, spec.outcome) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-14));
  xi << 0.5, 0.0, 0.0, std::log(0.8);
  double manual = -0.5 * std::log(2.0 * M_PI * 0.8) - 0.5 * 0.49 / 0.8;
  CHECK(log_f(1.2, x0, xi, spec.outcome) == doctest::Approx(manual).epsilon(1e-13));

  // mu = 1, sigma^2 = 4, y = 3 => -0.5 ln(8 pi) - 0.5
  xi << 1.0, 0.0, 0.0, std::log(4.0);
  CHECK(log_f(3.0, x0, xi, spec.outcome) ==
        doctest::Approx(-0.5 * std::log(8.0 * M_PI) - 0.5).epsilon(1e-13));
}

TEST_CASE("score_xi matches finite differences") {
  ModelSpec spec = toy_spec();
  Theta th = toy_theta();
  auto rng = substream(11, 0);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd x(2);
    x << nd(rng), nd(rng);
    double y = 2.0 + nd(rng);
    VectorXd s = score_xi(y, x, th.xi, spec.outcome);
    for (int j = 0; j < th.xi.size(); ++j) {
      double h = 1e-6 * (1.0 + std::abs(th.xi(j)));
      VectorXd xp = th.xi, xm = th.xi;
      xp(j) += h;
      xm(j) -= h;
      double fd = (log_f(y, x, xp, spec.outcome) - log_f(y, x, xm, spec.outcome)) /
                  (2.0 * h);
      CHECK(std::abs(s(j) - fd) <= 1e-5 * (1.0 + std::abs(fd)));
    }
  }
}

TEST_CASE("grad_t matches finite differences") {
  ModelSpec spec = toy_spec();
  Theta th = toy_theta();
  auto rng = substream(13, 0);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd x(2);
    x << nd(rng), nd(rng);
    VectorXd g = grad_t(x, th, spec);
    VectorXd v = th.pack();
    REQUIRE(g.size() == v.size());
    for (int j = 0; j < v.size(); ++j) {
      double h = 1e-6 * (1.0 + std::abs(v(j)));
      VectorXd vp = v, vm = v;
      vp(j) += h;
      vm(j) -= h;
      double fd = (t_fun(x, Theta::unpack(vp, 1, 4), spec) -
                   t_fun(x, Theta::unpack(vm, 1, 4), spec)) /
                  (2.0 * h);
      CHECK(std::abs(g(j) - fd) <= 1e-5 * (1.0 + std::abs(fd)));
    }
  }
}

TEST_CASE("tilted sampler moments") {
  ModelSpec spec = toy_spec();
  Theta th = toy_theta();
  VectorXd x(2);
  x << 0.3, 1.0;
  double mean = spec.outcome.mean(x, th.xi);
  double var = spec.outcome.variance(x, th.xi);
  auto rng = substream(17, 0);
  const int N = 40000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < N; ++i) {
    double y = tilted_outcome_sampler(x, th, spec, rng);
    s += y;
    s2 += y * y;
  }
  double m = s / N, v = s2 / N - m * m;
  // exponential tilt of a normal: mean shifts by gamma sigma^2, variance unchanged
  CHECK(m == doctest::Approx(mean + th.gamma * var).epsilon(0.02));
  CHECK(v == doctest::Approx(var).epsilon(0.05));
}

TEST_CASE("dataset validate") {
  Dataset data;
  data.x.resize(3, 1);
  data.x << 0.0, 1.0, 2.0;
  data.d.resize(3);
  data.d << 1, 0, 1;
  data.y.resize(3);
  data.y << 0.5, std::numeric_limits<double>::quiet_NaN(), 1.5;
  CHECK_NOTHROW(data.validate());
  CHECK(data.n() == 3);
  CHECK(data.n1() == 2);
  CHECK(data.n2() == 1);

  Dataset all_obs = data;
  all_obs.d << 1, 1, 1;
  CHECK_THROWS(all_obs.validate());  // degenerate: nothing missing
  Dataset bad_y = data;
  bad_y.y(0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(bad_y.validate());
}
