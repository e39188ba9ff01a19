#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "mirrorwm/rng.hpp"

namespace mirrorwm {

// Counter-based balanced position allocation over content-anchored frames.
struct CabsParams {
  int num_positions = 12;   // H, message positions per frame
  int context = 4;          // h, context tokens per eligibility gram
  int freq_bits = 3;        // f, anchored cut fires when hash mod 2^f == 0
  int window = 4;           // W, anchor queue capacity
  int min_len = 12;         // minimum frame length before an anchored cut
  double max_factor = 1.5;  // forced cut at floor(max_factor * H)

  int max_len() const { return static_cast<int>(max_factor * num_positions); }

  // Paper-default knobs for H positions; min_len = H.
  static CabsParams defaults(int num_positions);
  void validate() const;
};

struct CabsState {
  std::vector<long> counters;          // per-position counts, current frame
  std::deque<std::int64_t> queue;      // last W eligible tokens
  int frame_len = 0;                   // eligible tokens in current frame
  std::unordered_set<std::uint64_t> seen;  // context grams met this sequence
  std::vector<long> totals;            // per-position counts, whole sequence
};

// Streaming scheduler. Per eligible token the caller asks for a position
// (assign) and then commits the realized token (commit); replay over a known
// sequence uses assign_token. An h-gram context repeated anywhere earlier in
// the sequence is ineligible and leaves the state untouched.
class CabsScheduler {
 public:
  CabsScheduler(CabsParams params, SecretKey key);

  // Returns the message position for this step, or nullopt when the context
  // gram was already seen. A successful assign must be followed by commit.
  std::optional<int> assign(std::span<const std::int64_t> context);

  // Enqueues the realized token, advances counters and the frame, and cuts
  // the frame when (len >= min_len and anchor hash has f zero bits) or when
  // len reaches max_len. The anchor hash is taken before the enqueue.
  void commit(std::int64_t token);

  // assign + commit in one call (detection replay over known tokens).
  std::optional<int> assign_token(std::span<const std::int64_t> context,
                                  std::int64_t token);

  const CabsState& state() const { return state_; }
  const CabsParams& params() const { return params_; }
  void reset();

 private:
  CabsParams params_;
  SecretKey key_;
  CabsState state_;
  int pending_pos_ = -1;
};

// Stateless hash-of-context baseline: position = floor(u * H) for a keyed
// uniform of the context gram.
int naive_assign(const SecretKey& key, std::span<const std::int64_t> context,
                 int num_positions);

// Gini coefficient of nonnegative counts: sum |x_i - x_j| / (2 n^2 mean).
// All-zero input is a domain error.
double gini(std::span<const long> counts);

}  // namespace mirrorwm
