#include "mirrorwm/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "mirrorwm/rng.hpp"

namespace mirrorwm {

namespace {

// k distinct draws from [0, n), sorted ascending.
std::vector<std::uint64_t> sorted_distinct(std::uint64_t n, int k, SplitMix& rng) {
  std::unordered_set<std::uint64_t> picked;
  picked.reserve(k);
  // Floyd's method keeps the draw count at exactly k.
  for (std::uint64_t j = n - k; j < n; ++j) {
    const std::uint64_t v = rng.next_below(j + 1);
    picked.insert(picked.count(v) ? j : v);
  }
  std::vector<std::uint64_t> out(picked.begin(), picked.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::int64_t> copy_paste(std::span<const std::int64_t> wm,
                                     std::span<const std::int64_t> clean,
                                     double epsilon, int segment_len,
                                     std::uint64_t seed) {
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw std::invalid_argument("copy_paste: epsilon in [0,1]");
  }
  if (segment_len < 1) throw std::invalid_argument("copy_paste: segment_len >= 1");
  const std::size_t total = wm.size();
  const std::size_t replaced =
      static_cast<std::size_t>(std::ceil(epsilon * static_cast<double>(total)));
  std::vector<std::int64_t> out(wm.begin(), wm.end());
  if (replaced == 0) return out;
  if (clean.size() < replaced) {
    throw std::invalid_argument("copy_paste: clean text shorter than replaced mass");
  }

  const int n_seg =
      static_cast<int>((replaced + segment_len - 1) / static_cast<std::size_t>(segment_len));
  const std::size_t free_slots = total - replaced;

  // A sorted k-subset of [0, free + k) is a uniform placement of k ordered
  // non-overlapping segments: subtracting the rank leaves the gap prefix sums.
  SplitMix rng(seed);
  const auto marks = sorted_distinct(free_slots + n_seg, n_seg, rng);

  std::size_t consumed = 0;
  std::size_t placed_len = 0;
  for (int i = 0; i < n_seg; ++i) {
    const std::size_t gap_prefix = marks[i] - static_cast<std::size_t>(i);
    const std::size_t start = gap_prefix + placed_len;
    const std::size_t len = std::min<std::size_t>(segment_len, replaced - consumed);
    for (std::size_t j = 0; j < len; ++j) out[start + j] = clean[consumed + j];
    consumed += len;
    placed_len += len;
  }
  return out;
}

std::vector<std::int64_t> edit_attack(std::span<const std::int64_t> tokens,
                                      AttackKind kind, double epsilon,
                                      std::int64_t vocab_size,
                                      std::uint64_t seed) {
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw std::invalid_argument("edit_attack: epsilon in [0,1]");
  }
  if (kind == AttackKind::kCopyPaste) {
    throw std::invalid_argument("edit_attack: use copy_paste for that kind");
  }
  if (vocab_size < 1 || (kind == AttackKind::kSubstitute && vocab_size < 2)) {
    throw std::invalid_argument("edit_attack: vocab too small");
  }
  SplitMix rng(seed);
  std::vector<std::int64_t> out;
  out.reserve(tokens.size() + tokens.size() / 4);
  for (std::int64_t tok : tokens) {
    const bool hit = rng.next_uniform() < epsilon;
    switch (kind) {
      case AttackKind::kInsert:
        out.push_back(tok);
        if (hit) out.push_back(static_cast<std::int64_t>(rng.next_below(vocab_size)));
        break;
      case AttackKind::kDelete:
        if (!hit) out.push_back(tok);
        break;
      case AttackKind::kSubstitute:
        if (hit) {
          std::int64_t draw = static_cast<std::int64_t>(rng.next_below(vocab_size - 1));
          if (draw >= tok) ++draw;
          out.push_back(draw);
        } else {
          out.push_back(tok);
        }
        break;
      case AttackKind::kCopyPaste:
        break;
    }
  }
  if (kind == AttackKind::kDelete && out.empty() && !tokens.empty()) {
    throw std::runtime_error("edit_attack: deletion removed every token");
  }
  return out;
}

std::vector<std::int64_t> apply_attack(const AttackSpec& spec,
                                       std::span<const std::int64_t> wm,
                                       std::span<const std::int64_t> clean,
                                       std::int64_t vocab_size) {
  if (spec.kind == AttackKind::kCopyPaste) {
    return copy_paste(wm, clean, spec.epsilon, spec.segment_len, spec.seed);
  }
  return edit_attack(wm, spec.kind, spec.epsilon, vocab_size, spec.seed);
}

}  // namespace mirrorwm
