#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace mirrorwm {

// A next-token distribution: nonnegative entries summing to 1.
using TokenDistribution = Eigen::VectorXd;

bool is_distribution(const TokenDistribution& p, double tol = 1e-9);

// Shannon entropy in nats, with 0 * ln 0 = 0.
double entropy(const TokenDistribution& p);

// Mean of -ln p over realized token probabilities. Every probability must
// lie in (0, 1].
double empirical_entropy(std::span<const double> probs);

// Keep the k largest entries (ties resolved toward the lower index), apply
// temperature p^(1/tau), renormalize. k larger than the vocabulary clamps;
// temperature must be positive. tau -> 0 approaches one-hot on the argmax.
TokenDistribution truncate_topk(const TokenDistribution& p, int k,
                                double temperature);

// Random distribution over vocab_size tokens with the requested Shannon
// entropy (nats), reached by temperature bisection over seeded Gaussian
// logits. Exact at the edges: target >= ln V gives the uniform distribution
// and target <= 0 gives a one-hot.
TokenDistribution synthetic_distribution(int vocab_size, double target_entropy,
                                         std::uint64_t seed);

// Inverse-CDF categorical draw: smallest index whose cumulative probability
// exceeds u.
int sample_categorical(const TokenDistribution& p, double u);

// Whitespace-token vocabulary persisted one token per line (line number = id).
class Vocabulary {
 public:
  Vocabulary() = default;

  static Vocabulary from_tokens(const std::vector<std::string>& words);
  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  // Adds unseen words.
  std::int64_t id_of(const std::string& word);
  const std::string& word_of(std::int64_t id) const;
  int size() const { return static_cast<int>(words_.size()); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::int64_t> ids_;
};

// Reads a UTF-8 text file, splits on whitespace, maps words to ids through
// the vocabulary (growing it).
std::vector<std::int64_t> tokenize_file(const std::string& path, Vocabulary& vocab);

// n-gram counts with add-1 smoothing. Contexts shorter than order-1 use the
// matching lower-order count table; an unseen context yields the uniform
// distribution (add-1 smoothing of an empty row).
class NgramModel {
 public:
  static NgramModel fit(std::span<const std::int64_t> corpus, int order,
                        int vocab_size);

  TokenDistribution next_dist(std::span<const std::int64_t> context) const;
  int order() const { return order_; }
  int vocab_size() const { return vocab_size_; }

 private:
  int order_ = 0;
  int vocab_size_ = 0;
  // one table per context length 0 .. order-1; key = packed context tokens
  std::vector<std::unordered_map<std::string, std::unordered_map<std::int64_t, long>>> counts_;
  std::vector<std::unordered_map<std::string, long>> totals_;
};

// Pluggable source of next-token distributions. next_dist is deterministic
// given (source, context).
class DistributionSource {
 public:
  virtual ~DistributionSource() = default;
  virtual int vocab_size() const = 0;
  virtual TokenDistribution next_dist(std::span<const std::int64_t> context) const = 0;
};

// Synthetic source with controlled entropy. In fresh-per-step mode (the
// default) every distinct context sees an independent random distribution at
// the target entropy; in fixed mode every step sees the same distribution.
class SyntheticSource final : public DistributionSource {
 public:
  SyntheticSource(int vocab_size, double target_entropy, std::uint64_t seed,
                  bool fresh_per_step = true);

  int vocab_size() const override { return vocab_size_; }
  TokenDistribution next_dist(std::span<const std::int64_t> context) const override;

 private:
  int vocab_size_;
  double target_entropy_;
  std::uint64_t seed_;
  bool fresh_per_step_;
  TokenDistribution fixed_;
};

class NgramSource final : public DistributionSource {
 public:
  explicit NgramSource(NgramModel model) : model_(std::move(model)) {}

  int vocab_size() const override { return model_.vocab_size(); }
  TokenDistribution next_dist(std::span<const std::int64_t> context) const override {
    return model_.next_dist(context);
  }

 private:
  NgramModel model_;
};

}  // namespace mirrorwm
