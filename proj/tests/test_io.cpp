#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "mirrorwm/harness.hpp"
#include "mirrorwm/io.hpp"
#include "mirrorwm/stats.hpp"

using namespace mirrorwm;

namespace {

std::filesystem::path scratch_dir(const std::string& leaf) {
  auto dir = std::filesystem::temp_directory_path() / leaf;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_config(const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.source.vocab_size = 30;
  cfg.source.target_entropy = 1.5;
  cfg.msg_bits = 1;
  cfg.num_positions = 4;
  cfg.num_tokens = 80;
  cfg.n_sequences = 4;
  cfg.out_dir = out_dir;
  return cfg;
}

}  // namespace

TEST_CASE("jsonl records round trip") {
  auto dir = scratch_dir("mirrorwm_io_jsonl");
  const std::string path = (dir / "records.jsonl").string();

  DatasetRecord full;
  full.tokens = {1, 2, 3};
  full.positions = {-1, 0, 2};
  full.u = {0.125, 0.5};
  full.msg = {1, 0};
  full.params_digest = "0123456789abcdef";
  full.seed = 42;

  DatasetRecord sparse;  // null record: no positions, no message
  sparse.tokens = {9, 8};
  sparse.params_digest = "0123456789abcdef";
  sparse.seed = 43;

  write_jsonl(path, std::vector<DatasetRecord>{full, sparse});
  auto back = read_jsonl(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].tokens == full.tokens);
  CHECK(back[0].positions == full.positions);
  CHECK(back[0].u == full.u);
  CHECK(back[0].msg == full.msg);
  CHECK(back[0].seed == 42);
  CHECK(back[1].positions.empty());
  CHECK(back[1].msg.empty());

  std::filesystem::remove_all(dir);
}

TEST_CASE("digest16 is a stable 16-hex tag") {
  const std::string d = digest16("payload");
  CHECK(d.size() == 16);
  for (char c : d) CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));
  CHECK(d == digest16("payload"));
  CHECK(d != digest16("payloae"));
}

TEST_CASE("g17 formatting round-trips doubles exactly") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -0.0, 2.5}) {
    const std::string s = format_g17(x);
    CHECK(std::stod(s) == x);
  }
}

TEST_CASE("csv writing enforces row shape") {
  auto dir = scratch_dir("mirrorwm_io_csv");
  const std::string path = (dir / "table.csv").string();
  std::vector<std::string> header{"a", "b"};

  write_csv(path, header, {{"1", "2"}, {"3", "4"}});
  const std::string text = slurp(path);
  CHECK(text == "a,b\n1,2\n3,4\n");

  CHECK_THROWS_AS(write_csv(path, header, {{"only one"}}), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("experiment config round trip and digest scope") {
  ExperimentConfig cfg = tiny_config("unused");
  cfg.sampler = SamplerKind::kTournament;
  cfg.layers = 8;
  cfg.decoder = DecoderKind::kWeightedMean;
  cfg.scorer = ScorerKind::kWeightedMean;
  cfg.attack = AttackSpec{AttackKind::kDelete, 0.2, 20, 5};

  ExperimentConfig back = config_from_json(config_to_json(cfg));
  CHECK(config_to_json(back) == config_to_json(cfg));
  CHECK(back.params_digest() == cfg.params_digest());
  REQUIRE(back.attack.has_value());
  CHECK(back.attack->kind == AttackKind::kDelete);

  // the digest pins replay-relevant fields only
  ExperimentConfig moved = cfg;
  moved.out_dir = "elsewhere";
  moved.n_sequences = 999;
  moved.master_seed = 12345;
  CHECK(moved.params_digest() == cfg.params_digest());

  ExperimentConfig rekeyed = cfg;
  rekeyed.key_hex = "ff0102030405060708090a0b0c0d0e0f";
  CHECK(rekeyed.params_digest() != cfg.params_digest());

  ExperimentConfig rebitted = cfg;
  rebitted.msg_bits = 3;
  CHECK(rebitted.params_digest() != cfg.params_digest());

  auto dir = scratch_dir("mirrorwm_io_cfg");
  const std::string path = (dir / "config.json").string();
  save_config(cfg, path);
  CHECK(load_config(path).params_digest() == cfg.params_digest());
  std::filesystem::remove_all(dir);
}

TEST_CASE("generation is byte-identical across runs") {
  auto dir_a = scratch_dir("mirrorwm_io_gen_a");
  auto dir_b = scratch_dir("mirrorwm_io_gen_b");

  GeneratedPaths a = run_generate(tiny_config(dir_a.string()));
  GeneratedPaths b = run_generate(tiny_config(dir_b.string()));
  CHECK(slurp(a.watermarked) == slurp(b.watermarked));
  CHECK(slurp(a.null) == slurp(b.null));

  auto records = read_jsonl(a.watermarked);
  CHECK(records.size() == 4);
  for (const auto& r : records) {
    CHECK(r.tokens.size() == 80);
    CHECK(r.msg.size() == 4);
  }

  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("null dataset u-values look uniform") {
  auto dir = scratch_dir("mirrorwm_io_nullu");
  ExperimentConfig cfg = tiny_config(dir.string());
  cfg.num_tokens = 160;
  GeneratedPaths paths = run_generate(cfg);

  std::vector<double> u;
  for (const auto& r : read_jsonl(paths.null)) {
    u.insert(u.end(), r.u.begin(), r.u.end());
  }
  REQUIRE(u.size() > 300);
  CHECK(ks_statistic_uniform(u) < 1.63 / std::sqrt(double(u.size())));
  std::filesystem::remove_all(dir);
}

TEST_CASE("detection metrics reproduce and refuse foreign datasets") {
  auto dir = scratch_dir("mirrorwm_io_detect");
  ExperimentConfig cfg = tiny_config(dir.string());
  cfg.num_tokens = 150;
  cfg.n_sequences = 12;
  GeneratedPaths paths = run_generate(cfg);

  PipelineMetrics m1 = run_detect(cfg, paths.watermarked, paths.null);
  PipelineMetrics m2 = run_detect(cfg, paths.watermarked, paths.null);
  CHECK(m1.auc == m2.auc);
  CHECK(m1.threshold == m2.threshold);
  CHECK(m1.n_watermarked == 12);
  CHECK(m1.n_null == 12);
  CHECK(m1.auc > 0.9);  // easy regime; the full sweeps live in the harness runs

  // a dataset written under different replay parameters is refused
  ExperimentConfig other = cfg;
  other.msg_bits = 3;
  other.num_positions = 4;
  CHECK_THROWS_AS(run_detect(other, paths.watermarked, paths.null),
                  std::runtime_error);
  std::filesystem::remove_all(dir);
}
