// Benchmark: serial reference loops vs the OpenMP paths, for both the
// bootstrap and the Monte Carlo harness.  Also asserts the two paths give
// identical numbers (the parallel loops use per-task RNG substreams and a
// serial-order reduction).
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "mnarel/simulation.hpp"

using Clock = std::chrono::steady_clock;

static double seconds(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

int main(int argc, char** argv) {
  int reps = argc > 1 ? std::atoi(argv[1]) : 20;
  int boot_B = argc > 2 ? std::atoi(argv[2]) : 50;
  int n = argc > 3 ? std::atoi(argv[3]) : 500;

  mnar::ScenarioSpec scenario = mnar::example_scenario(1, 1.0, n);

  // bootstrap: one dataset, B refits
  mnar::Dataset data = mnar::generate(scenario, 42);
  mnar::FitResult fit = mnar::fit_mle(data, scenario.spec, {});
  if (!fit.converged) {
    std::fprintf(stderr, "benchmark fit did not converge\n");
    return 1;
  }
  mnar::BootstrapOptions bo;
  bo.fit.multistarts = 1;

  bo.threads = 1;
  auto t0 = Clock::now();
  mnar::BootstrapResult serial =
      mnar::bootstrap(data, scenario.spec, boot_B, 7, fit, bo);
  auto t1 = Clock::now();
  bo.threads = 0;
  mnar::BootstrapResult parallel =
      mnar::bootstrap(data, scenario.spec, boot_B, 7, fit, bo);
  auto t2 = Clock::now();

  bool boot_equal = serial.se_mu == parallel.se_mu &&
                    serial.estimates.rows() == parallel.estimates.rows();
  for (int b = 0; boot_equal && b < serial.estimates.rows(); ++b)
    for (int j = 0; j < serial.estimates.cols(); ++j) {
      double a = serial.estimates(b, j), c = parallel.estimates(b, j);
      if (!(a == c || (std::isnan(a) && std::isnan(c)))) boot_equal = false;
    }
  std::printf("bootstrap  B=%-4d n=%-5d serial %.3fs  openmp %.3fs  speedup %.2fx  identical %s\n",
              boot_B, n, seconds(t0, t1), seconds(t1, t2),
              seconds(t0, t1) / seconds(t1, t2), boot_equal ? "yes" : "NO");

  // Monte Carlo harness: reps generate+fit cycles, no CIs
  mnar::RunMcOptions mo;
  mo.with_ci = false;
  mo.threads = 1;
  auto t3 = Clock::now();
  auto rs = mnar::run_mc(scenario, reps, 11, mo);
  auto t4 = Clock::now();
  mo.threads = 0;
  auto rp = mnar::run_mc(scenario, reps, 11, mo);
  auto t5 = Clock::now();

  bool mc_equal = rs.size() == rp.size();
  for (size_t i = 0; mc_equal && i < rs.size(); ++i)
    mc_equal = rs[i].rb_pct == rp[i].rb_pct && rs[i].mse_x100 == rp[i].mse_x100;
  std::printf("run_mc     reps=%-3d n=%-5d serial %.3fs  openmp %.3fs  speedup %.2fx  identical %s\n",
              reps, n, seconds(t3, t4), seconds(t4, t5),
              seconds(t3, t4) / seconds(t4, t5), mc_equal ? "yes" : "NO");

  return boot_equal && mc_equal ? 0 : 1;
}
