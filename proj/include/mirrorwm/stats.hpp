#pragma once

#include <span>
#include <vector>

namespace mirrorwm {

// One-sample Kolmogorov-Smirnov statistic against Uniform(0,1).
double ks_statistic_uniform(std::span<const double> sample);

// Asymptotic Kolmogorov p-value for statistic d at sample size n.
double ks_pvalue(double d, std::size_t n);

// Two-sample KS statistic and asymptotic p-value.
double ks_statistic_two_sample(std::span<const double> a, std::span<const double> b);
double ks_pvalue_two_sample(double d, std::size_t n, std::size_t m);

// Chi-square goodness of fit of observed counts against expected
// probabilities; returns the p-value (upper tail, k-1 degrees of freedom).
double chi_square_gof_pvalue(std::span<const long> counts,
                             std::span<const double> probs);

// One-sided one-sample t statistic for mean(sample) > mu0.
double t_statistic_greater(std::span<const double> sample, double mu0);

// Sample mean and unbiased variance.
double mean_of(std::span<const double> xs);
double variance_of(std::span<const double> xs);

}  // namespace mirrorwm
