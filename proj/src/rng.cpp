#include "mirrorwm/rng.hpp"

#include <openssl/core_names.h>
#include <openssl/evp.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace mirrorwm {

namespace {

// Domain-separation tags, one per PRF call site.
constexpr std::uint8_t kDomainSample = 0x01;
constexpr std::uint8_t kDomainFrame = 0x02;
constexpr std::uint8_t kDomainScheduler = 0x03;

void append_be64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t read_be64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
  return v;
}

// Reusable HMAC engine, one per thread. Re-keyed on every digest so a single
// engine serves any number of keys; re-keying costs two compression rounds.
struct HmacEngine {
  EVP_MAC* mac = nullptr;
  EVP_MAC_CTX* ctx = nullptr;
  OSSL_PARAM params[2];
  char digestname[8] = "SHA256";

  HmacEngine() {
    mac = EVP_MAC_fetch(nullptr, "HMAC", nullptr);
    if (mac == nullptr) throw std::runtime_error("HMAC fetch failed");
    ctx = EVP_MAC_CTX_new(mac);
    if (ctx == nullptr) throw std::runtime_error("HMAC context allocation failed");
    params[0] = OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_DIGEST, digestname, 0);
    params[1] = OSSL_PARAM_construct_end();
  }
  ~HmacEngine() {
    EVP_MAC_CTX_free(ctx);
    EVP_MAC_free(mac);
  }

  std::array<std::uint8_t, 32> digest(std::span<const std::uint8_t> key,
                                      std::span<const std::uint8_t> msg) {
    std::array<std::uint8_t, 32> out{};
    std::size_t outl = 0;
    if (EVP_MAC_init(ctx, key.data(), key.size(), params) != 1 ||
        EVP_MAC_update(ctx, msg.data(), msg.size()) != 1 ||
        EVP_MAC_final(ctx, out.data(), &outl, out.size()) != 1 || outl != 32) {
      throw std::runtime_error("HMAC evaluation failed");
    }
    return out;
  }
};

HmacEngine& engine() {
  thread_local HmacEngine e;
  return e;
}

double fraction_from_digest(const std::array<std::uint8_t, 32>& d) {
  const std::uint64_t bits = read_be64(d.data());
  double u = static_cast<double>(bits) * 0x1p-64;
  // bits within 2^11 of 2^64 can round the quotient up to exactly 1.0.
  if (u >= 1.0) u = 0x1.fffffffffffffp-1;
  return u;
}

}  // namespace

SecretKey::SecretKey(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {
  if (bytes_.size() < 16) {
    throw std::invalid_argument("secret key must be at least 16 bytes");
  }
}

SecretKey SecretKey::from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("hex key must have even length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("invalid hex digit in key");
  };
  std::vector<std::uint8_t> bytes;
  bytes.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    bytes.push_back(static_cast<std::uint8_t>(nibble(hex[i]) * 16 + nibble(hex[i + 1])));
  }
  return SecretKey(std::move(bytes));
}

ContextWindow::ContextWindow(std::vector<std::int64_t> tokens, int h)
    : tokens_(std::move(tokens)) {
  if (h < 0 || static_cast<int>(tokens_.size()) != h) {
    throw std::invalid_argument("context window length does not match configured h");
  }
}

namespace detail {
std::array<std::uint8_t, 32> keyed_digest(std::span<const std::uint8_t> key,
                                          std::span<const std::uint8_t> msg) {
  return engine().digest(key, msg);
}
}  // namespace detail

double prf_uniform(const SecretKey& key, const ContextWindow& context,
                   std::int64_t token_id, int layer) {
  if (layer < 1) throw std::invalid_argument("prf_uniform: layer must be >= 1");
  if (token_id < 0) throw std::invalid_argument("prf_uniform: token id must be >= 0");
  std::vector<std::uint8_t> msg;
  msg.reserve(1 + 8 * (context.tokens().size() + 2));
  msg.push_back(kDomainSample);
  for (std::int64_t t : context.tokens()) append_be64(msg, static_cast<std::uint64_t>(t));
  append_be64(msg, static_cast<std::uint64_t>(token_id));
  append_be64(msg, static_cast<std::uint64_t>(layer));
  return fraction_from_digest(engine().digest(key.bytes(), msg));
}

std::uint64_t frame_hash(const SecretKey& key, std::span<const std::int64_t> window) {
  std::vector<std::uint8_t> msg;
  msg.reserve(1 + 8 * window.size());
  msg.push_back(kDomainFrame);
  for (std::int64_t t : window) append_be64(msg, static_cast<std::uint64_t>(t));
  return read_be64(engine().digest(key.bytes(), msg).data());
}

double scheduler_uniform(const SecretKey& key, std::span<const std::int64_t> context,
                         std::uint64_t salt) {
  std::vector<std::uint8_t> msg;
  msg.reserve(9 + 8 * context.size());
  msg.push_back(kDomainScheduler);
  append_be64(msg, salt);
  for (std::int64_t t : context) append_be64(msg, static_cast<std::uint64_t>(t));
  return fraction_from_digest(engine().digest(key.bytes(), msg));
}

std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double splitmix64_uniform(std::uint64_t& state) {
  return static_cast<double>(splitmix64_next(state) >> 11) * 0x1p-53;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ 0x6a09e667f3bcc909ULL;
  splitmix64_next(s);
  s ^= b + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
  return splitmix64_next(s);
}

std::int64_t SplitMix::next_below(std::int64_t n) {
  if (n <= 0) throw std::invalid_argument("next_below: n must be positive");
  // 53-bit fraction scaled to [0,n); bias is < n/2^53, irrelevant for sims.
  return static_cast<std::int64_t>(next_uniform() * static_cast<double>(n));
}

double SplitMix::next_normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = next_uniform();
  double u2 = next_uniform();
  if (u1 <= 0.0) u1 = 0x1p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

}  // namespace mirrorwm
