#include "mirrorwm/lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mirrorwm/rng.hpp"

namespace mirrorwm {

bool is_distribution(const TokenDistribution& p, double tol) {
  if (p.size() == 0) return false;
  if ((p.array() < 0.0).any()) return false;
  return std::fabs(p.sum() - 1.0) <= tol;
}

double entropy(const TokenDistribution& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  }
  return h;
}

double empirical_entropy(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("empirical_entropy: empty input");
  double s = 0.0;
  for (double p : probs) {
    if (p <= 0.0 || p > 1.0) {
      throw std::invalid_argument("empirical_entropy: probability outside (0,1]");
    }
    s -= std::log(p);
  }
  return s / static_cast<double>(probs.size());
}

TokenDistribution truncate_topk(const TokenDistribution& p, int k,
                                double temperature) {
  if (!is_distribution(p)) throw std::invalid_argument("truncate_topk: not a distribution");
  if (k < 1) throw std::invalid_argument("truncate_topk: k must be >= 1");
  if (!(temperature > 0.0)) throw std::invalid_argument("truncate_topk: temperature must be > 0");
  const int v = static_cast<int>(p.size());
  const int kk = std::min(k, v);

  std::vector<int> idx(v);
  std::iota(idx.begin(), idx.end(), 0);
  // ties keep the lower index
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return p[a] > p[b]; });

  // power in the log domain so tiny temperatures stay finite
  double max_lp = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < kk; ++j) {
    if (p[idx[j]] > 0.0) max_lp = std::max(max_lp, std::log(p[idx[j]]));
  }
  TokenDistribution q = TokenDistribution::Zero(v);
  double total = 0.0;
  for (int j = 0; j < kk; ++j) {
    const int i = idx[j];
    if (p[i] <= 0.0) continue;
    const double w = std::exp((std::log(p[i]) - max_lp) / temperature);
    q[i] = w;
    total += w;
  }
  if (total <= 0.0) throw std::invalid_argument("truncate_topk: empty support");
  q /= total;
  return q;
}

TokenDistribution synthetic_distribution(int vocab_size, double target_entropy,
                                         std::uint64_t seed) {
  if (vocab_size < 1) throw std::invalid_argument("synthetic_distribution: vocab_size >= 1");
  const double max_h = std::log(static_cast<double>(vocab_size));
  if (target_entropy < 0.0 || target_entropy > max_h + 1e-12) {
    throw std::invalid_argument("synthetic_distribution: entropy outside [0, ln V]");
  }
  SplitMix rng(seed);
  Eigen::VectorXd logits(vocab_size);
  for (int i = 0; i < vocab_size; ++i) logits[i] = rng.next_normal();

  if (target_entropy >= max_h - 1e-12) {
    return TokenDistribution::Constant(vocab_size, 1.0 / vocab_size);
  }
  if (target_entropy <= 1e-12) {
    Eigen::Index arg;
    logits.maxCoeff(&arg);
    TokenDistribution q = TokenDistribution::Zero(vocab_size);
    q[arg] = 1.0;
    return q;
  }

  auto softmax_at = [&](double beta) {
    Eigen::VectorXd z = beta * logits;
    const double m = z.maxCoeff();
    Eigen::VectorXd w = (z.array() - m).exp();
    return TokenDistribution(w / w.sum());
  };

  // entropy(softmax(beta * logits)) decreases in beta from ln V toward 0
  double lo = 0.0, hi = 1.0;
  while (entropy(softmax_at(hi)) > target_entropy) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e9) break;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (entropy(softmax_at(mid)) > target_entropy) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-13 * std::max(1.0, hi)) break;
  }
  return softmax_at(0.5 * (lo + hi));
}

int sample_categorical(const TokenDistribution& p, double u) {
  if (u < 0.0 || u >= 1.0) throw std::invalid_argument("sample_categorical: u in [0,1)");
  double cum = 0.0;
  int last_nonzero = -1;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) last_nonzero = static_cast<int>(i);
    cum += p[i];
    if (u < cum) return static_cast<int>(i);
  }
  if (last_nonzero < 0) throw std::invalid_argument("sample_categorical: zero distribution");
  return last_nonzero;  // rounding tail
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& words) {
  Vocabulary v;
  for (const auto& w : words) v.id_of(w);
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    v.words_.push_back(line);
    v.ids_.emplace(line, static_cast<std::int64_t>(v.words_.size() - 1));
  }
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary file: " + path);
  for (const auto& w : words_) out << w << "\n";
}

std::int64_t Vocabulary::id_of(const std::string& word) {
  auto it = ids_.find(word);
  if (it != ids_.end()) return it->second;
  words_.push_back(word);
  const std::int64_t id = static_cast<std::int64_t>(words_.size() - 1);
  ids_.emplace(word, id);
  return id;
}

const std::string& Vocabulary::word_of(std::int64_t id) const {
  if (id < 0 || id >= static_cast<std::int64_t>(words_.size())) {
    throw std::out_of_range("vocabulary id out of range");
  }
  return words_[static_cast<std::size_t>(id)];
}

std::vector<std::int64_t> tokenize_file(const std::string& path, Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<std::int64_t> out;
  std::string w;
  while (in >> w) out.push_back(vocab.id_of(w));
  return out;
}

namespace {
std::string pack_context(std::span<const std::int64_t> ctx) {
  std::string key;
  key.resize(ctx.size() * sizeof(std::int64_t));
  if (!ctx.empty()) std::memcpy(key.data(), ctx.data(), key.size());
  return key;
}
}  // namespace

NgramModel NgramModel::fit(std::span<const std::int64_t> corpus, int order,
                           int vocab_size) {
  if (order < 1) throw std::invalid_argument("NgramModel: order must be >= 1");
  if (corpus.empty()) throw std::invalid_argument("NgramModel: empty corpus");
  if (vocab_size <= 0) {
    std::int64_t mx = 0;
    for (auto t : corpus) mx = std::max(mx, t);
    vocab_size = static_cast<int>(mx + 1);
  }
  for (auto t : corpus) {
    if (t < 0 || t >= vocab_size) {
      throw std::invalid_argument("NgramModel: corpus token outside vocabulary");
    }
  }
  NgramModel m;
  m.order_ = order;
  m.vocab_size_ = vocab_size;
  m.counts_.resize(order);
  m.totals_.resize(order);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (int len = 0; len < order; ++len) {
      if (i < static_cast<std::size_t>(len)) continue;
      const auto ctx = corpus.subspan(i - len, len);
      const std::string key = pack_context(ctx);
      m.counts_[len][key][corpus[i]] += 1;
      m.totals_[len][key] += 1;
    }
  }
  return m;
}

TokenDistribution NgramModel::next_dist(std::span<const std::int64_t> context) const {
  // shorter-than-order contexts use their own (lower-order) count table
  const int len = std::min<int>(order_ - 1, static_cast<int>(context.size()));
  const auto ctx = context.subspan(context.size() - len, len);
  const std::string key = pack_context(ctx);
  const auto tot = totals_[len].find(key);
  if (tot == totals_[len].end()) {
    // unseen context: add-1 smoothing of an empty row is uniform
    return TokenDistribution::Constant(vocab_size_, 1.0 / vocab_size_);
  }
  const auto& row = counts_[len].at(key);
  TokenDistribution p = TokenDistribution::Constant(vocab_size_, 1.0);
  for (const auto& [tok, c] : row) p[tok] += static_cast<double>(c);
  p /= (static_cast<double>(tot->second) + static_cast<double>(vocab_size_));
  return p;
}

SyntheticSource::SyntheticSource(int vocab_size, double target_entropy,
                                 std::uint64_t seed, bool fresh_per_step)
    : vocab_size_(vocab_size),
      target_entropy_(target_entropy),
      seed_(seed),
      fresh_per_step_(fresh_per_step) {
  if (!fresh_per_step_) {
    fixed_ = synthetic_distribution(vocab_size_, target_entropy_, seed_);
  }
}

TokenDistribution SyntheticSource::next_dist(
    std::span<const std::int64_t> context) const {
  if (!fresh_per_step_) return fixed_;
  std::uint64_t s = seed_;
  for (std::int64_t t : context) s = mix_seed(s, static_cast<std::uint64_t>(t) + 1);
  s = mix_seed(s, 0x5353u);
  return synthetic_distribution(vocab_size_, target_entropy_, s);
}

}  // namespace mirrorwm
