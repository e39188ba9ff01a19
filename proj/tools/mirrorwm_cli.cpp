// Command-line experiment harness wrapping the library pipeline.
// Precedence for settings: built-in defaults < MIRRORWM_KEY env < flags
// < --config file.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mirrorwm/evalkit.hpp"
#include "mirrorwm/harness.hpp"

namespace {

using namespace mirrorwm;

struct CliState {
  ExperimentConfig cfg;
  std::string config_path;
  std::string attack_kind;
};

void add_config_flags(CLI::App* app, CliState& st) {
  app->add_option("--config", st.config_path,
                  "JSON config file; overrides the flags below");
  app->add_option("--key", st.cfg.key_hex, "secret key as hex (>= 32 chars)");
  app->add_option("--vocab", st.cfg.source.vocab_size, "synthetic vocab size");
  app->add_option("--entropy", st.cfg.source.target_entropy,
                  "synthetic target entropy (nats)");
  app->add_option("--source-seed", st.cfg.source.seed, "synthetic logits seed");
  app->add_flag("--fresh-source,!--fixed-source", st.cfg.source.fresh_per_step,
                "fresh distribution per step vs one fixed distribution");
  app->add_option("--corpus", st.cfg.source.corpus_path,
                  "text corpus; switches the source to an n-gram model");
  app->add_option("--order", st.cfg.source.order, "n-gram order");
  app->add_option("--msg-bits", st.cfg.msg_bits, "bits per message symbol");
  app->add_option("--positions", st.cfg.num_positions, "message positions H");
  app->add_option("--sampler", st.cfg.sampler, "sampling scheme")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, SamplerKind>{
              {"gumbel", SamplerKind::kGumbel},
              {"tournament", SamplerKind::kTournament}},
          CLI::ignore_case));
  app->add_option("--layers", st.cfg.layers, "tournament layers");
  app->add_option("--context", st.cfg.context, "scheduler context length h");
  app->add_option("--freq-bits", st.cfg.freq_bits, "anchor cut frequency bits");
  app->add_option("--anchor-window", st.cfg.window, "anchor queue length");
  app->add_option("--min-len", st.cfg.min_len, "min frame length (0 = H)");
  app->add_option("--max-factor", st.cfg.max_factor, "forced cut at H * factor");
  app->add_option("--top-k", st.cfg.top_k, "top-k truncation (0 = off)");
  app->add_option("--temperature", st.cfg.temperature, "sampling temperature");
  app->add_option("--tokens", st.cfg.num_tokens, "tokens per sequence");
  app->add_option("--sequences", st.cfg.n_sequences, "sequences per dataset");
  app->add_option("--decoder", st.cfg.decoder, "per-position decoder")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, DecoderKind>{
              {"gumbel", DecoderKind::kGumbel},
              {"wmean", DecoderKind::kWeightedMean},
              {"bayes", DecoderKind::kBayes}},
          CLI::ignore_case));
  app->add_option("--scorer", st.cfg.scorer, "sequence scorer")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, ScorerKind>{{"log", ScorerKind::kLog},
                                            {"wmean", ScorerKind::kWeightedMean},
                                            {"bayes", ScorerKind::kBayes}},
          CLI::ignore_case));
  app->add_option("--pi-weight", st.cfg.pi_weight, "Bayes pi-model weight");
  app->add_option("--pi-bias", st.cfg.pi_bias, "Bayes pi-model bias");
  app->add_option("--target-fpr", st.cfg.target_fpr, "calibration FPR");
  app->add_option("--attack-kind", st.attack_kind,
                  "copy_paste | insert | delete | substitute");
  app->add_option("--master-seed", st.cfg.master_seed, "master seed");
  app->add_option("--out-dir", st.cfg.out_dir, "artifact directory");
}

void finalize_config(CliState& st, double epsilon, int segment_len,
                     std::uint64_t attack_seed) {
  if (!st.cfg.source.corpus_path.empty()) {
    st.cfg.source.kind = SourceSpec::Kind::kNgram;
  }
  if (!st.config_path.empty()) {
    st.cfg = load_config(st.config_path);
  }
  // the attack flags describe the operation, so they survive a config load
  if (!st.attack_kind.empty()) {
    AttackSpec spec;
    if (st.attack_kind == "copy_paste") spec.kind = AttackKind::kCopyPaste;
    else if (st.attack_kind == "insert") spec.kind = AttackKind::kInsert;
    else if (st.attack_kind == "delete") spec.kind = AttackKind::kDelete;
    else if (st.attack_kind == "substitute") spec.kind = AttackKind::kSubstitute;
    else throw CLI::ValidationError("--attack-kind", "unknown attack kind");
    spec.epsilon = epsilon;
    spec.segment_len = segment_len;
    spec.seed = attack_seed;
    st.cfg.attack = spec;
  }
}

void print_metrics(const PipelineMetrics& m) {
  std::cout << "auc " << m.auc << "\n"
            << "tpr_at_target_fpr " << m.tpr_at_target << "\n"
            << "eer " << m.eer << "\n"
            << "bit_acc " << m.bit_acc << "\n"
            << "threshold " << m.threshold << "\n"
            << "n_watermarked " << m.n_watermarked << "\n"
            << "n_null " << m.n_null << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-bit text watermarking toolkit"};
  app.require_subcommand(1);

  CliState st;
  if (const char* env_key = std::getenv("MIRRORWM_KEY")) {
    st.cfg.key_hex = env_key;
  }
  double epsilon = 0.0;
  int segment_len = 20;
  std::uint64_t attack_seed = 0;

  auto* gen = app.add_subcommand("generate", "write paired datasets");
  add_config_flags(gen, st);

  auto* det = app.add_subcommand("detect", "score datasets and report metrics");
  add_config_flags(det, st);
  std::string wm_path, null_path, report_prefix;
  det->add_option("--watermarked", wm_path, "watermarked JSONL")->required();
  det->add_option("--null", null_path, "null JSONL")->required();
  det->add_option("--report", report_prefix, "CSV report prefix");

  auto* atk = app.add_subcommand("attack", "apply an attack to a dataset");
  add_config_flags(atk, st);
  std::string in_path, clean_path, out_path;
  atk->add_option("--in", in_path, "input JSONL")->required();
  atk->add_option("--clean", clean_path, "clean JSONL for copy-paste");
  atk->add_option("--out", out_path, "output JSONL")->required();
  atk->add_option("--epsilon", epsilon, "attacked fraction");
  atk->add_option("--segment-len", segment_len, "copy-paste span length");
  atk->add_option("--attack-seed", attack_seed, "attack seed");

  auto* swp = app.add_subcommand("sweep", "token-budget sweep of the pipeline");
  add_config_flags(swp, st);
  std::vector<int> sweep_tokens{100, 200, 400};
  std::string sweep_out = "sweep.csv";
  swp->add_option("--token-grid", sweep_tokens, "token budgets to sweep");
  swp->add_option("--out", sweep_out, "output CSV");

  auto* thy = app.add_subcommand("theory", "closed-form EER sweep");
  TheoryGrid grid;
  std::string theory_out = "theory.csv";
  thy->add_option("--token-grid", grid.tokens, "token budgets");
  thy->add_option("--entropy-grid", grid.entropies, "entropies (nats)");
  thy->add_option("--msg-bits-grid", grid.msg_bits, "message bit widths");
  thy->add_option("--layer-grid", grid.layers, "tournament layer counts");
  thy->add_option("--collision-grid", grid.collisions, "collision probabilities");
  thy->add_option("--out", theory_out, "output CSV");

  auto* chk = app.add_subcommand("chunk-sim", "chunk-level detector comparison");
  ChunkModel model;
  int trials = 100000;
  std::uint64_t chunk_seed = 1;
  double glrt_threshold = 0.0;
  bool glrt_threshold_set = false;
  std::string chunk_out = "chunk_sim.csv";
  chk->add_option("--chunks", model.num_chunks, "chunks per trial");
  chk->add_option("--msg-bits", model.msg_bits, "bits per chunk message");
  chk->add_option("--alpha", model.alpha, "Beta shape (1 = null-like)");
  chk->add_option("--prior-w", model.prior_w, "watermark prior");
  chk->add_option("--trials", trials, "Monte Carlo trials");
  chk->add_option("--seed", chunk_seed, "simulation seed");
  chk->add_option("--glrt-threshold", glrt_threshold, "GLRT threshold")
      ->each([&](const std::string&) { glrt_threshold_set = true; });
  chk->add_option("--out", chunk_out, "output CSV");

  auto* rep = app.add_subcommand("report", "recompute metrics from a scores CSV");
  std::string scores_path;
  double report_fpr = 0.01;
  rep->add_option("--scores", scores_path, "label,score CSV")->required();
  rep->add_option("--target-fpr", report_fpr, "TPR operating point");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed() || det->parsed() || atk->parsed() || swp->parsed()) {
      finalize_config(st, epsilon, segment_len, attack_seed);
    }
    if (gen->parsed()) {
      const auto paths = run_generate(st.cfg);
      std::cout << "watermarked " << paths.watermarked << "\n"
                << "null " << paths.null << "\n"
                << "config " << paths.config << "\n";
    } else if (det->parsed()) {
      print_metrics(run_detect(st.cfg, wm_path, null_path, report_prefix));
    } else if (atk->parsed()) {
      run_attack_file(st.cfg, in_path, clean_path, out_path);
      std::cout << "attacked " << out_path << "\n";
    } else if (swp->parsed()) {
      const std::vector<std::string> header{"tokens", "auc", "tpr_at_target_fpr",
                                            "eer", "bit_acc"};
      std::vector<std::vector<std::string>> rows;
      for (int t : sweep_tokens) {
        ExperimentConfig cfg = st.cfg;
        cfg.num_tokens = t;
        cfg.out_dir = st.cfg.out_dir + "/tokens_" + std::to_string(t);
        const auto paths = run_generate(cfg);
        const auto m = run_detect(cfg, paths.watermarked, paths.null);
        rows.push_back({std::to_string(t), format_g17(m.auc),
                        format_g17(m.tpr_at_target), format_g17(m.eer),
                        format_g17(m.bit_acc)});
      }
      write_csv(sweep_out, header, rows);
      std::cout << "sweep " << sweep_out << "\n";
    } else if (thy->parsed()) {
      run_theory(grid, theory_out);
      std::cout << "theory " << theory_out << "\n";
    } else if (chk->parsed()) {
      const auto s = run_chunk_sim(
          model, trials, chunk_seed,
          glrt_threshold_set ? std::optional<double>(glrt_threshold) : std::nullopt,
          chunk_out);
      std::cout << "marginal fpr " << s.marginal_fpr << " fnr " << s.marginal_fnr
                << "\nglrt fpr " << s.glrt_fpr << " fnr " << s.glrt_fnr
                << "\ndetect_then_decode ber " << s.dtd_ber
                << "\nalways_decode ber " << s.always_ber << "\n"
                << "table " << chunk_out << "\n";
    } else if (rep->parsed()) {
      std::ifstream in(scores_path);
      if (!in) throw std::runtime_error("report: cannot open " + scores_path);
      std::string line;
      std::getline(in, line);  // header
      std::vector<double> pos, neg;
      while (std::getline(in, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        const std::string label = line.substr(0, comma);
        const double score = std::stod(line.substr(comma + 1));
        (label == "watermarked" ? pos : neg).push_back(score);
      }
      std::cout << "auc " << auc(pos, neg) << "\n"
                << "tpr_at_target_fpr " << tpr_at_fpr(pos, neg, report_fpr) << "\n"
                << "eer " << empirical_eer(pos, neg) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
