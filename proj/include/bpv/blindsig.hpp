#pragma once

// Chaum-style RSA blind signatures.
//
// The signer computes raw b^d mod N on whatever blinded value it is handed;
// there is no hash-and-sign step. That is only acceptable because every
// message that matters is a rigid padded ballot (see ballot_codec.hpp): a
// recovered value that does not parse as one is rejected, and the key is
// used for a single election and nothing else. Do not reuse these keys for
// general-purpose signing.

#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>

#include "bpv/bigint.hpp"
#include "bpv/bytes.hpp"
#include "bpv/error.hpp"
#include "bpv/random.hpp"

namespace bpv {

struct PublicKey {
  BigInt n;
  BigInt e;

  std::size_t modulus_bytes() const { return byte_length(n); }
  bool operator==(const PublicKey&) const = default;
};

struct BlindKeyPair {
  BigInt n;
  BigInt e;
  BigInt d;

  PublicKey public_key() const { return {n, e}; }
  std::size_t modulus_bytes() const { return byte_length(n); }
  bool operator==(const BlindKeyPair&) const = default;
};

/// A unit r of Z_N used to mask a message as m * r^e.
class BlindingFactor {
 public:
  BlindingFactor(const PublicKey& pk, BigInt r) : r_(std::move(r)) {
    if (r_ < 1 || r_ >= pk.n) throw Error(Errc::FactorNotUnit, "blinding factor out of range");
    if (gcd(r_, pk.n) != 1) throw Error(Errc::FactorNotUnit, "blinding factor shares a factor with N");
  }
  const BigInt& value() const noexcept { return r_; }

 private:
  BigInt r_;
};

struct BlindedMessage {
  BigInt value;
  bool operator==(const BlindedMessage&) const = default;
};

struct Signature {
  BigInt value;
  bool operator==(const Signature&) const = default;
};

// ---------------------------------------------------------------------------
// Primality and key generation

namespace detail {

inline constexpr std::array<unsigned, 54> kSmallPrimes = {
    2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,  47,  53,  59,  61,
    67,  71,  73,  79,  83,  89,  97,  101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151,
    157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251};

/// Uniform integer in [0, bound).
inline BigInt random_below(const BigInt& bound, Rng& rng) {
  const std::size_t bits = bit_length(bound);
  const std::size_t nbytes = (bits + 7) / 8;
  const unsigned excess = static_cast<unsigned>(nbytes * 8 - bits);
  for (;;) {
    Bytes raw = rng.bytes(nbytes);
    raw[0] &= static_cast<std::uint8_t>(0xFF >> excess);
    BigInt v = bytes_to_int(raw);
    if (v < bound) return v;
  }
}

}  // namespace detail

/// Miller-Rabin with `rounds` random bases; error probability <= 4^-rounds.
inline bool is_probable_prime(const BigInt& n, Rng& rng, int rounds = 40) {
  if (n < 2) return false;
  for (unsigned p : detail::kSmallPrimes) {
    if (n == p) return true;
    if (n % p == 0) return false;
  }
  const BigInt n_minus_1 = n - 1;
  BigInt d = n_minus_1;
  unsigned s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (int i = 0; i < rounds; ++i) {
    const BigInt a = 2 + detail::random_below(n - 3, rng);  // [2, n-2]
    BigInt x = powm(a, d, n);
    if (x == 1 || x == n_minus_1) continue;
    bool composite = true;
    for (unsigned j = 1; j < s; ++j) {
      x = powm(x, 2, n);
      if (x == n_minus_1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

/// Random prime with exactly `bits` bits and its two top bits set, so the
/// product of two such primes has exactly the sum of their sizes.
inline BigInt random_prime(std::size_t bits, Rng& rng) {
  const std::size_t nbytes = (bits + 7) / 8;
  const unsigned excess = static_cast<unsigned>(nbytes * 8 - bits);
  for (;;) {
    Bytes raw = rng.bytes(nbytes);
    raw[0] &= static_cast<std::uint8_t>(0xFF >> excess);
    BigInt cand = bytes_to_int(raw);
    bit_set(cand, static_cast<unsigned>(bits - 1));
    bit_set(cand, static_cast<unsigned>(bits - 2));
    bit_set(cand, 0);
    if (is_probable_prime(cand, rng)) return cand;
  }
}

inline constexpr std::size_t kMinKeyBits = 12;
inline constexpr std::size_t kProductionKeyBits = 2048;

/// Key pair together with the primes it was built from.
struct GeneratedKey {
  BlindKeyPair key;
  BigInt p;
  BigInt q;
};

/// Generates an RSA key pair with a modulus of exactly `bits` bits.
/// e = 65537 where it fits; very small toy moduli fall back to the smallest
/// odd e coprime to phi(N).
inline GeneratedKey generate_key(std::size_t bits, Rng& rng) {
  if (bits < kMinKeyBits)
    throw Error(Errc::InvariantViolation, "key size below " + std::to_string(kMinKeyBits) + " bits");
  const std::size_t p_bits = (bits + 1) / 2;
  const std::size_t q_bits = bits / 2;
  for (;;) {
    BigInt p = random_prime(p_bits, rng);
    BigInt q = random_prime(q_bits, rng);
    if (p == q) continue;
    const BigInt n = p * q;
    if (bit_length(n) != bits) continue;
    const BigInt phi = (p - 1) * (q - 1);
    BigInt e = 65537;
    if (e >= phi || gcd(e, phi) != 1) {
      if (bits > 32) continue;  // regenerate rather than weaken e
      e = 3;
      while (gcd(e, phi) != 1) e += 2;
      if (e >= phi) continue;
    }
    BigInt d = mod_inverse(e, phi);
    return {{n, e, d}, std::move(p), std::move(q)};
  }
}

inline BlindKeyPair keygen(std::size_t bits, Rng& rng) { return generate_key(bits, rng).key; }

/// Fixed toy keys for exhaustive tests.
inline BlindKeyPair toy_key_253() { return {253, 3, 147}; }    // 11 * 23
inline BlindKeyPair toy_key_3233() { return {3233, 17, 2753}; }  // 61 * 53

// ---------------------------------------------------------------------------
// Protocol operations

inline BlindingFactor sample_blinding_factor(const PublicKey& pk, Rng& rng) {
  for (;;) {
    BigInt r = 2 + detail::random_below(pk.n - 2, rng);  // [2, N-1]
    if (gcd(r, pk.n) == 1) return BlindingFactor(pk, std::move(r));
  }
}

inline BlindedMessage blind(const PublicKey& pk, const BigInt& m, const BlindingFactor& r) {
  if (m < 0 || m >= pk.n) throw Error(Errc::MessageOutOfRange, "message not in [0, N)");
  if (r.value() >= pk.n) throw Error(Errc::FactorNotUnit, "blinding factor belongs to another key");
  return {(m * powm(r.value(), pk.e, pk.n)) % pk.n};
}

inline Signature sign_blinded(const BlindKeyPair& kp, const BlindedMessage& b) {
  if (b.value < 0 || b.value >= kp.n) throw Error(Errc::MessageOutOfRange, "blinded value not in [0, N)");
  return {powm(b.value, kp.d, kp.n)};
}

inline Signature unblind(const PublicKey& pk, const BigInt& blinded_signature, const BlindingFactor& r) {
  if (blinded_signature < 0 || blinded_signature >= pk.n)
    throw Error(Errc::MessageOutOfRange, "blinded signature not in [0, N)");
  const BigInt inv = mod_inverse(r.value(), pk.n);
  if (inv == 0) throw Error(Errc::FactorNotUnit, "blinding factor not invertible");
  return {(blinded_signature * inv) % pk.n};
}

/// s^e mod N. Acceptance is decided by unpadding the result.
inline BigInt verify_recover(const PublicKey& pk, const Signature& s) {
  if (s.value < 0 || s.value >= pk.n) throw Error(Errc::MessageOutOfRange, "signature not in [0, N)");
  return powm(s.value, pk.e, pk.n);
}

/// Signature as big-endian bytes, zero-padded to the modulus width.
inline Bytes serialize_signature(const PublicKey& pk, const Signature& s) {
  return int_to_bytes(s.value, pk.modulus_bytes());
}

// ---------------------------------------------------------------------------
// Key files: `N=<hex>` and `e=<hex>` lines; private files add `d=<hex>`.

namespace detail {

inline std::map<std::string, BigInt> parse_key_fields(std::istream& in) {
  std::map<std::string, BigInt> fields;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::ParseError, "key line without '='");
    fields[line.substr(0, eq)] = bigint_from_hex(line.substr(eq + 1));
  }
  return fields;
}

}  // namespace detail

inline std::string format_public_key(const PublicKey& pk) {
  return "N=" + to_hex(pk.n) + "\ne=" + to_hex(pk.e) + "\n";
}

inline std::string format_private_key(const BlindKeyPair& kp) {
  return format_public_key(kp.public_key()) + "d=" + to_hex(kp.d) + "\n";
}

inline PublicKey parse_public_key(std::istream& in) {
  auto f = detail::parse_key_fields(in);
  if (!f.count("N") || !f.count("e")) throw Error(Errc::ParseError, "public key needs N and e");
  return {f["N"], f["e"]};
}

inline BlindKeyPair parse_private_key(std::istream& in) {
  auto f = detail::parse_key_fields(in);
  if (!f.count("N") || !f.count("e") || !f.count("d"))
    throw Error(Errc::ParseError, "private key needs N, e and d");
  return {f["N"], f["e"], f["d"]};
}

inline PublicKey load_public_key(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  return parse_public_key(in);
}

inline BlindKeyPair load_private_key(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  return parse_private_key(in);
}

}  // namespace bpv
