#pragma once

#include <functional>

namespace mirrorwm {

// Adaptive Simpson quadrature to an absolute tolerance (default 1e-10).
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double abs_tol = 1e-10);

// Regularized lower incomplete gamma P(s, x); series for x < s+1, continued
// fraction otherwise. Relative accuracy ~1e-12.
double reg_lower_gamma(double s, double x);

// Standard normal CDF and upper tail via erfc.
double normal_cdf(double x);
double normal_tail(double x);

}  // namespace mirrorwm
