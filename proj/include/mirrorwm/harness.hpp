// Experiment pipeline shared by the CLI and the test drivers: config
// round-tripping with digests, seeded batch generation, detection metrics,
// attacks over datasets, theory sweeps, and the chunk-simulation table.
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mirrorwm/attacks.hpp"
#include "mirrorwm/chunkbayes.hpp"
#include "mirrorwm/codec.hpp"
#include "mirrorwm/io.hpp"
#include "mirrorwm/lm.hpp"

namespace mirrorwm {

struct SourceSpec {
  enum class Kind { kSynthetic, kNgram };
  Kind kind = Kind::kSynthetic;
  int vocab_size = 100;
  double target_entropy = 1.7;
  std::uint64_t seed = 7;
  bool fresh_per_step = true;  // false: one fixed distribution for every step
  std::string corpus_path;     // ngram
  int order = 3;               // ngram
};

struct ExperimentConfig {
  std::string key_hex = "000102030405060708090a0b0c0d0e0f";
  SourceSpec source;
  int msg_bits = 1;
  int num_positions = 1;
  SamplerKind sampler = SamplerKind::kGumbel;
  int layers = 30;  // tournament only
  int context = 4;
  int freq_bits = 3;
  int window = 4;
  int min_len = 0;  // 0 means num_positions
  double max_factor = 1.5;
  int top_k = 0;
  double temperature = 1.0;
  int num_tokens = 200;
  int n_sequences = 100;
  DecoderKind decoder = DecoderKind::kGumbel;
  ScorerKind scorer = ScorerKind::kLog;
  std::optional<double> pi_weight, pi_bias;  // logistic model for Bayes modes
  double target_fpr = 0.01;
  std::optional<AttackSpec> attack;
  std::uint64_t master_seed = 1;
  std::string out_dir = "runs";

  WatermarkParams watermark_params() const;
  std::unique_ptr<DistributionSource> make_source() const;
  // Digest over the fields detection replay depends on; survives attacks.
  std::string params_digest() const;
};

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
void save_config(const ExperimentConfig& cfg, const std::string& path);
ExperimentConfig load_config(const std::string& path);

struct GeneratedPaths {
  std::string watermarked;
  std::string null;
  std::string config;
};

// Writes paired watermarked/null datasets plus the config snapshot under
// cfg.out_dir. Per-sequence seeds derive from (master_seed, index) through
// the keyed frame hash, so ordering and thread count cannot change results.
GeneratedPaths run_generate(const ExperimentConfig& cfg);

struct PipelineMetrics {
  double auc = 0.5;
  double tpr_at_target = 0.0;
  double eer = 0.5;
  double bit_acc = 0.0;
  double threshold = 0.0;  // null-score quantile at target_fpr
  int n_watermarked = 0;
  int n_null = 0;
  std::vector<double> pos_scores;
  std::vector<double> neg_scores;
};

// Scores both datasets (refusing records whose digest mismatches cfg),
// calibrates the threshold on the null scores, and reports metrics. When
// report_prefix is non-empty, writes <prefix>_metrics.csv and
// <prefix>_scores.csv.
PipelineMetrics run_detect(const ExperimentConfig& cfg,
                           const std::string& wm_path,
                           const std::string& null_path,
                           const std::string& report_prefix = "");

// Applies cfg.attack to every record of in_path; copy-paste draws its clean
// tokens from the same-index record of clean_path. Digest tags are kept.
void run_attack_file(const ExperimentConfig& cfg, const std::string& in_path,
                     const std::string& clean_path, const std::string& out_path);

struct TheoryGrid {
  std::vector<double> tokens = {50, 100, 200, 400};
  std::vector<double> entropies = {0.8, 1.2, 1.7, 2.5};
  std::vector<int> msg_bits = {0, 1, 3};
  std::vector<int> layers = {10, 20, 30};
  std::vector<double> collisions = {0.5, 0.7, 0.9};
};

// Evaluates both closed forms over the grid into one CSV.
void run_theory(const TheoryGrid& grid, const std::string& csv_path);

struct ChunkSimSummary {
  double marginal_fpr = 0.0, marginal_fnr = 0.0;
  double glrt_fpr = 0.0, glrt_fnr = 0.0;
  double dtd_ber = 0.0;     // decode only when detected
  double always_ber = 0.0;  // decode every watermarked trial
  int n_null = 0, n_watermarked = 0;
};

ChunkSimSummary run_chunk_sim(const ChunkModel& model, int n_trials,
                              std::uint64_t seed,
                              std::optional<double> glrt_threshold = std::nullopt,
                              const std::string& csv_path = "");

// Deterministic worker pool: fn(i) for i in [0, n), any thread, each once.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace mirrorwm
