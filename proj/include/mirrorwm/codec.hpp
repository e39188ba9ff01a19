#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mirrorwm/cabs.hpp"
#include "mirrorwm/lm.hpp"
#include "mirrorwm/mirror.hpp"
#include "mirrorwm/rng.hpp"
#include "mirrorwm/sampler.hpp"

namespace mirrorwm {

enum class SamplerKind { kGumbel, kTournament };
enum class DecoderKind { kGumbel, kWeightedMean, kBayes };
enum class ScorerKind { kLog, kWeightedMean, kBayes };

struct TournamentParams {
  int layers = 30;
  Eigen::VectorXd alpha;  // per-layer weights; empty means all-ones

  Eigen::VectorXd weights() const {
    return alpha.size() == 0 ? Eigen::VectorXd::Ones(layers) : alpha;
  }
};

// Everything both sides must agree on. The secret key plus these knobs fully
// determine the embedded randomness.
struct WatermarkParams {
  SecretKey key;
  int msg_bits = 3;        // m, bits per position
  int num_positions = 12;  // H, message positions
  SamplerKind sampler = SamplerKind::kGumbel;
  TournamentParams tournament;
  CabsParams cabs = CabsParams::defaults(12);
  int top_k = 0;  // 0 disables truncation
  double temperature = 1.0;

  explicit WatermarkParams(SecretKey k) : key(std::move(k)) {}

  int num_layers() const {
    return sampler == SamplerKind::kTournament ? tournament.layers : 1;
  }
  int num_symbols() const { return 1 << msg_bits; }
  void validate() const;
};

// One symbol per position, each in [0, 2^m).
using MessageSequence = std::vector<int>;

struct StepTrace {
  std::int64_t token = 0;
  int position = -1;       // -1: warmup or ineligible (plain sampling)
  std::vector<double> u;   // selected token's base PRF u per layer
  double prob = 0.0;       // selected-token probability after truncation
};

struct EncodeResult {
  std::vector<std::int64_t> tokens;
  std::vector<StepTrace> trace;
};

// Watermarked generation: the first h tokens and ineligible steps sample
// plainly; every other step mirrors its PRF randomness by the message symbol
// of its CABS position and selects via the configured sampler.
EncodeResult encode(const DistributionSource& source, const WatermarkParams& params,
                    const MessageSequence& msg, int num_tokens, std::uint64_t seed);

// Unwatermarked generation from the same source and truncation settings.
std::vector<std::int64_t> generate_plain(const DistributionSource& source,
                                         int top_k, double temperature,
                                         int num_tokens, std::uint64_t seed);

// ---- scores ----------------------------------------------------------------

// -sum ln(1 - u). u == 1 clamps to the largest double below 1; the optional
// flag reports that a clamp happened.
double log_score(std::span<const double> u, bool* clamped = nullptr);

// (1 / (T L)) * sum_t sum_l alpha_l * u(t, l).
double wmean_score(const Eigen::MatrixXd& u, const Eigen::VectorXd& alpha);

// Predicts P(pi = 2 | history): the chance a tournament match saw two
// distinct candidates. Either a logistic model on the mean of the previous
// layers' u-values or an oracle given per-layer collision probabilities.
class PiModel {
 public:
  static PiModel logistic(double weight, double bias);
  static PiModel oracle(Eigen::VectorXd p_two_per_layer);  // = 1 - C_l

  // layer is 0-based; feature is the mean of earlier-layer u (0.5 when none).
  double p_two(int layer, double feature) const;

  double weight() const { return weight_; }
  double bias() const { return bias_; }
  bool is_oracle() const { return oracle_; }

 private:
  bool oracle_ = false;
  Eigen::VectorXd p_two_;
  double weight_ = 0.0;
  double bias_ = 0.0;
};

// Posterior probability of the watermark given mirrored u-values:
// sigmoid( sum_cells ln[ P(u|pi=1) P(pi=1|.) + P(u|pi=2) P(pi=2|.) ]
//          + ln(prior / (1 - prior)) )
// with P(u|pi=1) = 1 and P(u|pi=2) = 2u. Per-cell likelihoods are floored
// at 1e-300 before the log.
double bayes_score(const Eigen::MatrixXd& u, const PiModel& pi, double prior_w);

// ---- per-position decoders -------------------------------------------------

struct DecodeOutcome {
  int symbol = 0;
  bool empty = false;  // no u-values reached this position
};

// argmax over symbols of log_score applied to mirrored u (single layer).
DecodeOutcome decode_position_gumbel(std::span<const double> u, int msg_bits);

// argmax over symbols of wmean_score applied to mirrored u (K x L).
DecodeOutcome decode_position_wmean(const Eigen::MatrixXd& u,
                                    const Eigen::VectorXd& alpha, int msg_bits);

// argmax over symbols of ln P(symbol) + Bayesian log-likelihood of mirrored u.
// msg_prior empty means uniform.
DecodeOutcome decode_position_bayes(const Eigen::MatrixXd& u, const PiModel& pi,
                                    int msg_bits,
                                    std::span<const double> msg_prior = {});

// ---- detection -------------------------------------------------------------

struct DetectionReport {
  MessageSequence decoded;
  std::vector<bool> empty_positions;
  double score = 0.0;
  double threshold = 0.0;
  bool decision = false;
  int eligible_tokens = 0;
  std::vector<Eigen::MatrixXd> position_u;  // base (unmirrored) u per position
};

struct DetectOptions {
  DecoderKind decoder = DecoderKind::kGumbel;
  ScorerKind scorer = ScorerKind::kLog;
  double threshold = 0.0;
  const PiModel* pi = nullptr;   // required by Bayes decoder/scorer
  double prior_w = 0.5;          // watermark prior for the Bayes scorer
  std::vector<double> msg_prior; // empty = uniform
};

// Replays the scheduler over the tokens, buckets recomputed PRF u-values by
// position, decodes each position, re-mirrors every u by the decoded symbol
// and aggregates with the chosen scorer. decision = score > threshold.
DetectionReport detect(std::span<const std::int64_t> tokens,
                       const WatermarkParams& params, const DetectOptions& opts);

// ---- pi-model training -----------------------------------------------------

struct PiSample {
  double feature = 0.5;  // mean of the final winner's earlier-layer u
  int pi = 2;            // 1: same candidate twice, 2: distinct candidates
  double u = 0.0;        // final winner's u at this layer
  int layer = 0;
};

// Simulates full 2^L brackets with fresh uniforms and records, per layer,
// whether the eventual winner's match saw distinct candidates.
std::vector<PiSample> make_pi_training_samples(const TokenDistribution& p,
                                               int layers, int n_brackets,
                                               std::uint64_t seed);

// Logistic fit of P(pi = 2 | feature) by gradient descent (tolerance 1e-6,
// at most 1e4 epochs). Throws if either class is absent.
PiModel train_pi_model(std::span<const PiSample> samples);

}  // namespace mirrorwm
