// Token-level robustness attacks: copy-paste mixing of clean text into a
// watermarked sequence, and independent insert/delete/substitute edits.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mirrorwm {

enum class AttackKind { kCopyPaste, kInsert, kDelete, kSubstitute };

struct AttackSpec {
  AttackKind kind = AttackKind::kCopyPaste;
  double epsilon = 0.0;  // attacked fraction, in [0,1]
  int segment_len = 20;  // copy-paste span length
  std::uint64_t seed = 0;
};

// Replaces ceil(epsilon * T) tokens of `wm` with the leading clean tokens, in
// contiguous non-overlapping segments of `segment_len` (the last one shorter
// when the total is not a multiple) at uniformly random offsets. Length is
// preserved; clean must supply at least the replaced mass.
std::vector<std::int64_t> copy_paste(std::span<const std::int64_t> wm,
                                     std::span<const std::int64_t> clean,
                                     double epsilon, int segment_len,
                                     std::uint64_t seed);

// Per-token independent edit with probability epsilon. Insert appends a
// uniform vocab token after the position, delete drops the token, substitute
// redraws uniformly over the other vocab entries.
std::vector<std::int64_t> edit_attack(std::span<const std::int64_t> tokens,
                                      AttackKind kind, double epsilon,
                                      std::int64_t vocab_size,
                                      std::uint64_t seed);

// Dispatch on spec.kind; clean/vocab_size are consulted per kind.
std::vector<std::int64_t> apply_attack(const AttackSpec& spec,
                                       std::span<const std::int64_t> wm,
                                       std::span<const std::int64_t> clean,
                                       std::int64_t vocab_size);

}  // namespace mirrorwm
