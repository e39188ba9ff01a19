#include "mirrorwm/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mirrorwm/rng.hpp"

namespace mirrorwm {

namespace {

void require_finite(std::span<const double> xs, const char* what) {
  if (xs.empty()) throw std::invalid_argument(std::string(what) + ": empty scores");
  for (double x : xs) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string(what) + ": non-finite score");
    }
  }
}

}  // namespace

double auc(std::span<const double> pos, std::span<const double> neg) {
  require_finite(pos, "auc");
  require_finite(neg, "auc");
  std::vector<double> sorted_neg(neg.begin(), neg.end());
  std::sort(sorted_neg.begin(), sorted_neg.end());
  double wins = 0.0;
  for (double p : pos) {
    const auto lo = std::lower_bound(sorted_neg.begin(), sorted_neg.end(), p);
    const auto hi = std::upper_bound(lo, sorted_neg.end(), p);
    wins += static_cast<double>(lo - sorted_neg.begin()) +
            0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double tpr_at_fpr(std::span<const double> pos, std::span<const double> neg,
                  double fpr) {
  require_finite(pos, "tpr_at_fpr");
  require_finite(neg, "tpr_at_fpr");
  if (!(fpr > 0.0 && fpr < 1.0)) {
    throw std::invalid_argument("tpr_at_fpr: fpr in (0,1)");
  }
  std::vector<double> sorted_neg(neg.begin(), neg.end());
  std::sort(sorted_neg.begin(), sorted_neg.end());
  const double n = static_cast<double>(sorted_neg.size());
  // "higher" interpolation of the (1-fpr) quantile
  const std::size_t idx = static_cast<std::size_t>(
      std::min(n - 1.0, std::ceil((1.0 - fpr) * (n - 1.0))));
  const double threshold = sorted_neg[idx];
  std::size_t above = 0;
  for (double p : pos) {
    if (p > threshold) ++above;
  }
  return static_cast<double>(above) / static_cast<double>(pos.size());
}

double empirical_eer(std::span<const double> pos, std::span<const double> neg) {
  require_finite(pos, "empirical_eer");
  require_finite(neg, "empirical_eer");
  std::vector<double> thresholds(pos.begin(), pos.end());
  thresholds.insert(thresholds.end(), neg.begin(), neg.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  std::vector<double> sorted_pos(pos.begin(), pos.end());
  std::vector<double> sorted_neg(neg.begin(), neg.end());
  std::sort(sorted_pos.begin(), sorted_pos.end());
  std::sort(sorted_neg.begin(), sorted_neg.end());
  const double np = static_cast<double>(sorted_pos.size());
  const double nn = static_cast<double>(sorted_neg.size());

  double best_gap = 2.0;
  double best_rate = 0.5;
  for (double tau : thresholds) {
    // decision rule: score > tau
    const double fpr =
        static_cast<double>(sorted_neg.end() - std::upper_bound(sorted_neg.begin(),
                                                                sorted_neg.end(), tau)) /
        nn;
    const double fnr =
        static_cast<double>(std::lower_bound(sorted_pos.begin(), sorted_pos.end(),
                                             tau) -
                            sorted_pos.begin()) /
        np;
    const double gap = std::fabs(fpr - fnr);
    if (gap < best_gap) {
      best_gap = gap;
      best_rate = 0.5 * (fpr + fnr);
    }
  }
  return best_rate;
}

double bit_accuracy(std::span<const int> decoded, std::span<const int> truth,
                    int msg_bits) {
  if (decoded.size() != truth.size()) {
    throw std::invalid_argument("bit_accuracy: length mismatch");
  }
  if (msg_bits < 1 || msg_bits > 30) {
    throw std::invalid_argument("bit_accuracy: msg_bits out of range");
  }
  if (decoded.empty()) throw std::invalid_argument("bit_accuracy: empty sequences");
  long match = 0;
  for (std::size_t i = 0; i < decoded.size(); ++i) {
    const unsigned diff =
        static_cast<unsigned>(decoded[i]) ^ static_cast<unsigned>(truth[i]);
    for (int b = 0; b < msg_bits; ++b) {
      if (((diff >> b) & 1u) == 0u) ++match;
    }
  }
  return static_cast<double>(match) /
         (static_cast<double>(decoded.size()) * msg_bits);
}

BootstrapCi bootstrap_ci(std::span<const double> samples,
                         const std::function<double(std::span<const double>)>& stat,
                         int resamples, double level, std::uint64_t seed) {
  require_finite(samples, "bootstrap_ci");
  if (resamples < 1) throw std::invalid_argument("bootstrap_ci: resamples >= 1");
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("bootstrap_ci: level in (0,1)");
  }
  SplitMix rng(seed);
  const std::size_t n = samples.size();
  std::vector<double> resample(n);
  std::vector<double> stats(resamples);
  for (int r = 0; r < resamples; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      resample[i] = samples[rng.next_below(n)];
    }
    stats[r] = stat(resample);
  }
  std::sort(stats.begin(), stats.end());
  const double tail = 0.5 * (1.0 - level);
  const auto pick = [&](double q) {
    const double r = q * (resamples - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(r));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(r));
    const double w = r - static_cast<double>(lo);
    return (1.0 - w) * stats[lo] + w * stats[hi];
  };
  return {pick(tail), pick(1.0 - tail)};
}

}  // namespace mirrorwm
