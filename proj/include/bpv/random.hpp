#pragma once

#include <sodium.h>

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

#include "bpv/bytes.hpp"

namespace bpv {

/// Seedable ChaCha20 keystream generator. All protocol randomness flows
/// through one of these so that scenarios replay byte-for-byte.
///
/// Not thread-safe; derive independent streams with `split` instead of
/// sharing one instance between tasks.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) {
    std::array<std::uint8_t, 8> le{};
    for (int i = 0; i < 8; ++i) le[i] = static_cast<std::uint8_t>(seed >> (8 * i));
    key_ = Sha256().update("bpv-rng-seed").update(le).finish();
  }

  explicit Rng(const Digest& key) : key_(key) {}

  /// Fresh generator seeded from the operating system.
  static Rng from_os() {
    detail::ensure_sodium();
    Digest key{};
    randombytes_buf(key.data(), key.size());
    return Rng(key);
  }

  /// Independent child stream. The parent advances, so repeated splits
  /// with the same label still differ.
  Rng split(std::string_view label) {
    std::array<std::uint8_t, 32> salt{};
    fill(salt);
    return Rng(Sha256().update("bpv-rng-split").update(key_).update(label).update(salt).finish());
  }

  void fill(std::span<std::uint8_t> out) {
    for (auto& b : out) {
      if (pos_ == block_.size()) refill();
      b = block_[pos_++];
    }
  }

  template <std::size_t N>
  std::array<std::uint8_t, N> bytes() {
    std::array<std::uint8_t, N> out{};
    fill(out);
    return out;
  }

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
  }

  result_type operator()() {
    std::array<std::uint8_t, 8> raw{};
    fill(raw);
    result_type v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<result_type>(raw[i]) << (8 * i);
    return v;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform integer in [0, bound). bound must be non-zero.
  std::uint64_t uniform(std::uint64_t bound) {
    const std::uint64_t limit = max() - (max() % bound);
    for (;;) {
      std::uint64_t v = (*this)();
      if (v < limit) return v % bound;
    }
  }

  /// Bernoulli trial with success probability p.
  bool chance(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53 < p;
  }

 private:
  void refill() {
    std::array<std::uint8_t, crypto_stream_chacha20_ietf_NONCEBYTES> nonce{};
    for (int i = 0; i < 8; ++i) nonce[4 + i] = static_cast<std::uint8_t>(counter_ >> (8 * i));
    block_.fill(0);
    crypto_stream_chacha20_ietf_xor_ic(block_.data(), block_.data(), block_.size(), nonce.data(), 0,
                                       key_.data());
    ++counter_;
    pos_ = 0;
  }

  Digest key_{};
  std::array<std::uint8_t, 256> block_{};
  std::size_t pos_ = block_.size();
  std::uint64_t counter_ = 0;
};

}  // namespace bpv
