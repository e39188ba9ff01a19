#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace mirrorwm {

// Secret watermarking key. All watermark randomness is a deterministic
// function of (key, context, token, layer); two runs with the same key and
// inputs produce bit-identical streams.
class SecretKey {
 public:
  // Requires at least 16 bytes of key material.
  explicit SecretKey(std::vector<std::uint8_t> bytes);

  // Parses an even-length hex string ("a1b2..."), at least 32 hex chars.
  static SecretKey from_hex(std::string_view hex);

  std::span<const std::uint8_t> bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

// Fixed-length token context used to seed per-step sampling randomness.
// The length must equal the configured context size h; anything else is a
// configuration error at construction time.
class ContextWindow {
 public:
  ContextWindow(std::vector<std::int64_t> tokens, int h);

  std::span<const std::int64_t> tokens() const { return tokens_; }
  int size() const { return static_cast<int>(tokens_.size()); }

 private:
  std::vector<std::int64_t> tokens_;
};

// Keyed uniform in [0,1) for one (context, candidate token, layer) triple.
// Layers are 1-based; layer 1 is the only layer for single-layer sampling.
// The value is the first 8 bytes of a keyed hash, read big-endian, divided
// by 2^64 (clamped below 1 to guard the floating rounding edge).
double prf_uniform(const SecretKey& key, const ContextWindow& context,
                   std::int64_t token_id, int layer);

// Keyed 64-bit digest of an ordered token window (possibly empty). Used for
// content-anchored frame boundaries and derived experiment seeds.
std::uint64_t frame_hash(const SecretKey& key,
                         std::span<const std::int64_t> window);

// Keyed uniform in [0,1) for scheduler decisions (position tie-breaks and
// hash-based position assignment). Separate domain tag from prf_uniform so
// scheduler draws never collide with sampling draws; salt distinguishes
// scheduler call sites.
double scheduler_uniform(const SecretKey& key,
                         std::span<const std::int64_t> context,
                         std::uint64_t salt);

namespace detail {
// Raw keyed HMAC-SHA256; exposed for the config digest and tests.
std::array<std::uint8_t, 32> keyed_digest(std::span<const std::uint8_t> key,
                                          std::span<const std::uint8_t> msg);
}  // namespace detail

// splitmix64 step; the standard finalizer-based generator. Used for all
// simulation-side randomness (plain sampling draws, attack placement,
// synthetic logits) where cryptographic strength is not needed but
// cross-platform bit-exactness is.
std::uint64_t splitmix64_next(std::uint64_t& state);

// Deterministic uniform in [0,1) from a splitmix64 state (53-bit fraction).
double splitmix64_uniform(std::uint64_t& state);

// Stateless mix of two 64-bit values into a fresh seed; used to derive
// per-step and per-sequence simulation seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// Small deterministic RNG wrapper around splitmix64.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64() { return splitmix64_next(state_); }
  double next_uniform() { return splitmix64_uniform(state_); }
  // Unbiased-enough integer draw in [0, n) for simulation use.
  std::int64_t next_below(std::int64_t n);
  // Standard normal via Box-Muller; deterministic given the seed.
  double next_normal();

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mirrorwm
