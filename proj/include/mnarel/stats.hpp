#pragma once

namespace mnar {

// Standard-normal quantile (upper p in (0,1) conventions: returns z with
// Phi(z) = p).
double normal_quantile(double p);

// Chi-square with df degrees of freedom.
double chisq_quantile(double p, int df);
double chisq_cdf(double x, int df);

}  // namespace mnar
