// Chunk-level Bayes detection over mod-1 shifted Beta statistics: marginalized
// detector, GLRT, per-chunk MAP decoding, score densities, and tail bounds,
// plus a Monte Carlo driver comparing the detectors.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mirrorwm/rng.hpp"

namespace mirrorwm {

// K independent chunks; within each, one statistic u_k in [0,1). Under the
// null u_k is uniform; under watermark with message M, u_k = (Z + delta(M))
// mod 1 with Z ~ Beta(alpha, 1).
struct ChunkModel {
  int num_chunks = 20;       // K
  int msg_bits = 2;          // m; messages are 0..2^m-1
  double alpha = 5.0;        // >= 1; alpha = 1 is indistinguishable from null
  double prior_w = 0.5;      // P(w = 1)
  std::vector<double> msg_prior;  // P(M | w=1); empty means uniform

  int num_messages() const { return 1 << msg_bits; }
  double prior_threshold() const;  // ln(P(w=0) / P(w=1))
  void validate() const;
};

// Pivot-grid shift for message M: (-M / 2^m) mod 1.
double message_shift(int symbol, int msg_bits);

// Density of (B + delta) mod 1 with B ~ Beta(alpha, 1); x in [0,1).
double wrapped_beta_pdf(double x, double alpha, double delta);

// Density of S = ln(1/(1-u)) where u is wrapped-Beta with shift `delta`.
// No shift (correct or absent message): alpha e^{-s} (1-e^{-s})^{alpha-1}.
double score_pdf(double s, double alpha,
                 std::optional<double> delta = std::nullopt);

struct DetectorResult {
  double statistic = 0.0;
  bool decision = false;
};

// Sum over chunks of ln[(1/2^m) sum_M f(u_k|M) / f(u_k|null)], compared to
// the supplied threshold (default: the prior threshold).
DetectorResult marginal_detector(std::span<const double> u,
                                 const ChunkModel& model,
                                 std::optional<double> threshold = std::nullopt);

// Sum over chunks of max_M ln[f(u_k|M) / f(u_k|null)]; never below the
// marginal statistic on the same data.
DetectorResult glrt_detector(std::span<const double> u, const ChunkModel& model,
                             double threshold);

// argmax_M P(M) f(u|M); ties resolved toward the lowest symbol.
int map_decode(double u, const ChunkModel& model);

// Global statistic sum_t ln(1/(1-z_t)); same numeric core as codec log_score.
double lambda_statistic(std::span<const double> z);

// Chernoff bound on P(Lambda >= tau) under the null (T Exp(1) terms);
// vacuous (= 1) when tau <= T.
double fpr_bound(double tau, double T);

// Bernstein-style bound on P(Lambda < tau) under watermark with per-token
// mean h_emp; vacuous when tau / T >= h_emp. c is a caller-supplied constant.
double fnr_bound(double tau, double T, double h_emp, double c = 0.1);

// Beta(alpha, 1) draw via inverse CDF.
double sample_beta_z(double alpha, SplitMix& rng);

// Lambda over `tokens` draws: Beta(alpha,1) scores (alpha = 1 gives the null).
double sample_lambda(double alpha, int tokens, SplitMix& rng);

struct ChunkTrial {
  bool watermarked = false;
  // intended payload per chunk; drawn under both hypotheses but shapes u
  // only when watermarked, so null decodes score at chance
  std::vector<int> messages;
  std::vector<double> u;       // chunk statistics
  double marginal_stat = 0.0;
  bool marginal_decision = false;
  double glrt_stat = 0.0;
  bool glrt_decision = false;
  std::vector<int> decoded;    // per-chunk MAP decode (always computed)
  bool detect_then_decode = false;  // gate: identical to marginal_decision
};

// Draws w ~ prior, messages ~ msg_prior, chunk statistics per the model, and
// evaluates both detectors plus per-chunk MAP decoding for every trial.
// Thresholds default to the model's prior threshold.
std::vector<ChunkTrial> simulate_chunks(
    const ChunkModel& model, int n_trials, std::uint64_t seed,
    std::optional<double> marginal_threshold = std::nullopt,
    std::optional<double> glrt_threshold = std::nullopt);

}  // namespace mirrorwm
