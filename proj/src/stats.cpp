#include "mirrorwm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mirrorwm/numerics.hpp"

namespace mirrorwm {

double ks_statistic_uniform(std::span<const double> sample) {
  if (sample.empty()) throw std::invalid_argument("ks: empty sample");
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double cdf = s[i];  // uniform CDF
    d = std::max(d, std::fabs((static_cast<double>(i) + 1.0) / n - cdf));
    d = std::max(d, std::fabs(cdf - static_cast<double>(i) / n));
  }
  return d;
}

double ks_pvalue(double d, std::size_t n) {
  const double lambda = (std::sqrt(static_cast<double>(n)) + 0.12 +
                         0.11 / std::sqrt(static_cast<double>(n))) *
                        d;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = 2.0 * ((j % 2 == 1) ? 1.0 : -1.0) *
                        std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::fabs(term) < 1e-12) break;
  }
  return std::min(1.0, std::max(0.0, sum));
}

double ks_statistic_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks2: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= x) ++i;
    while (j < sb.size() && sb[j] <= x) ++j;
    const double fa = static_cast<double>(i) / static_cast<double>(sa.size());
    const double fb = static_cast<double>(j) / static_cast<double>(sb.size());
    d = std::max(d, std::fabs(fa - fb));
  }
  return d;
}

double ks_pvalue_two_sample(double d, std::size_t n, std::size_t m) {
  const double ne = static_cast<double>(n) * static_cast<double>(m) /
                    (static_cast<double>(n) + static_cast<double>(m));
  return ks_pvalue(d, static_cast<std::size_t>(std::llround(ne)));
}

double chi_square_gof_pvalue(std::span<const long> counts,
                             std::span<const double> probs) {
  if (counts.size() != probs.size() || counts.size() < 2) {
    throw std::invalid_argument("chi_square_gof: size mismatch");
  }
  long total = 0;
  for (long c : counts) total += c;
  if (total <= 0) throw std::invalid_argument("chi_square_gof: empty counts");
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double expected = probs[i] * static_cast<double>(total);
    if (expected <= 0.0) {
      if (counts[i] != 0) return 0.0;
      continue;
    }
    const double diff = static_cast<double>(counts[i]) - expected;
    stat += diff * diff / expected;
  }
  const double dof = static_cast<double>(counts.size() - 1);
  return 1.0 - reg_lower_gamma(dof / 2.0, stat / 2.0);
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean_of: empty");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double variance_of(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("variance_of: need n >= 2");
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

double t_statistic_greater(std::span<const double> sample, double mu0) {
  const double m = mean_of(sample);
  const double v = variance_of(sample);
  return (m - mu0) / std::sqrt(v / static_cast<double>(sample.size()));
}

}  // namespace mirrorwm
