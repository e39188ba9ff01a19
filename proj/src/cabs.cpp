#include "mirrorwm/cabs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mirrorwm {

CabsParams CabsParams::defaults(int num_positions) {
  CabsParams p;
  p.num_positions = num_positions;
  p.min_len = num_positions;
  return p;
}

void CabsParams::validate() const {
  if (num_positions < 1) throw std::invalid_argument("cabs: H must be >= 1");
  if (context < 1) throw std::invalid_argument("cabs: context length must be >= 1");
  if (freq_bits < 0 || freq_bits > 62) throw std::invalid_argument("cabs: freq_bits out of range");
  if (window < 1) throw std::invalid_argument("cabs: window must be >= 1");
  if (min_len < 1) throw std::invalid_argument("cabs: min_len must be >= 1");
  if (max_len() < min_len) throw std::invalid_argument("cabs: max_len below min_len");
}

namespace {
std::uint64_t gram_hash(std::span<const std::int64_t> context) {
  std::uint64_t s = 0x43414253u;  // seen-set hashing, both sides compute it
  for (std::int64_t t : context) s = mix_seed(s, static_cast<std::uint64_t>(t));
  return s;
}
}  // namespace

CabsScheduler::CabsScheduler(CabsParams params, SecretKey key)
    : params_(params), key_(std::move(key)) {
  params_.validate();
  reset();
}

void CabsScheduler::reset() {
  state_ = CabsState{};
  state_.counters.assign(params_.num_positions, 0);
  state_.totals.assign(params_.num_positions, 0);
  pending_pos_ = -1;
}

std::optional<int> CabsScheduler::assign(std::span<const std::int64_t> context) {
  if (static_cast<int>(context.size()) != params_.context) {
    throw std::invalid_argument("cabs assign: context length must equal h");
  }
  if (pending_pos_ >= 0) throw std::logic_error("cabs assign: pending commit");
  const std::uint64_t gram = gram_hash(context);
  if (state_.seen.contains(gram)) return std::nullopt;  // repeated gram
  state_.seen.insert(gram);

  const long min_count = *std::min_element(state_.counters.begin(), state_.counters.end());
  std::vector<int> min_positions;
  for (int i = 0; i < params_.num_positions; ++i) {
    if (state_.counters[i] == min_count) min_positions.push_back(i);
  }
  const double u = scheduler_uniform(key_, context, 0);
  int idx = static_cast<int>(u * static_cast<double>(min_positions.size()));
  idx = std::min<int>(idx, static_cast<int>(min_positions.size()) - 1);
  pending_pos_ = min_positions[idx];
  return pending_pos_;
}

void CabsScheduler::commit(std::int64_t token) {
  if (pending_pos_ < 0) throw std::logic_error("cabs commit: no pending assignment");
  // anchor hash over the queue before this token joins it
  const std::vector<std::int64_t> window(state_.queue.begin(), state_.queue.end());
  const std::uint64_t anchor = frame_hash(key_, window);

  state_.queue.push_back(token);
  while (static_cast<int>(state_.queue.size()) > params_.window) state_.queue.pop_front();

  state_.counters[pending_pos_] += 1;
  state_.totals[pending_pos_] += 1;
  state_.frame_len += 1;
  pending_pos_ = -1;

  const std::uint64_t mask = (std::uint64_t{1} << params_.freq_bits) - 1;
  const bool anchored = state_.frame_len >= params_.min_len && (anchor & mask) == 0;
  if (anchored || state_.frame_len >= params_.max_len()) {
    std::fill(state_.counters.begin(), state_.counters.end(), 0L);
    state_.queue.clear();
    state_.frame_len = 0;
  }
}

std::optional<int> CabsScheduler::assign_token(std::span<const std::int64_t> context,
                                               std::int64_t token) {
  const auto pos = assign(context);
  if (pos.has_value()) commit(token);
  return pos;
}

int naive_assign(const SecretKey& key, std::span<const std::int64_t> context,
                 int num_positions) {
  if (num_positions < 1) throw std::invalid_argument("naive_assign: H must be >= 1");
  const double u = scheduler_uniform(key, context, 1);
  return std::min(static_cast<int>(u * num_positions), num_positions - 1);
}

double gini(std::span<const long> counts) {
  if (counts.empty()) throw std::invalid_argument("gini: empty input");
  double total = 0.0;
  for (long c : counts) {
    if (c < 0) throw std::invalid_argument("gini: negative count");
    total += static_cast<double>(c);
  }
  if (total <= 0.0) throw std::invalid_argument("gini: all counts zero");
  std::vector<double> xs(counts.begin(), counts.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double weighted = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    weighted += (static_cast<double>(i) + 1.0) * xs[i];
  }
  return 2.0 * weighted / (n * total) - (n + 1.0) / n;
}

}  // namespace mirrorwm
