#include "mnarel/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace mnar {

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> nd;
  return boost::math::quantile(nd, p);
}

double chisq_quantile(double p, int df) {
  boost::math::chi_squared_distribution<double> chi(df);
  return boost::math::quantile(chi, p);
}

double chisq_cdf(double x, int df) {
  boost::math::chi_squared_distribution<double> chi(df);
  return boost::math::cdf(chi, x);
}

}  // namespace mnar
