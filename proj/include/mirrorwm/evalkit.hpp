// Detection and decoding metrics: ROC summaries, empirical equal error rate,
// bitwise decoding accuracy, and a percentile bootstrap.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace mirrorwm {

// Mann-Whitney statistic; ties count one half. Scores must be finite.
double auc(std::span<const double> pos, std::span<const double> neg);

// Threshold is the (1 - fpr) quantile of the negatives with "higher"
// interpolation, so the realized FPR never exceeds the request; returns the
// fraction of positives strictly above it.
double tpr_at_fpr(std::span<const double> pos, std::span<const double> neg,
                  double fpr);

// Scans thresholds at every observed score; at the minimizer of |FPR - FNR|
// (lowest such threshold on ties) returns (FPR + FNR) / 2.
double empirical_eer(std::span<const double> pos, std::span<const double> neg);

// Fraction of agreeing bits over msg_bits * positions, symbols compared
// bitwise; sequences must have equal length.
double bit_accuracy(std::span<const int> decoded, std::span<const int> truth,
                    int msg_bits);

struct BootstrapCi {
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile bootstrap of `stat` over resamples of `samples`;
// level is the two-sided coverage (0.9 gives the 5th..95th band).
BootstrapCi bootstrap_ci(std::span<const double> samples,
                         const std::function<double(std::span<const double>)>& stat,
                         int resamples, double level, std::uint64_t seed);

}  // namespace mirrorwm
