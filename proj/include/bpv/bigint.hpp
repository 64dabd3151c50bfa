#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cctype>
#include <cstdint>
#include <iterator>
#include <string>
#include <string_view>

#include "bpv/bytes.hpp"
#include "bpv/error.hpp"

namespace bpv {

/// GMP-backed integer; expression templates off so results are plain values.
using BigInt = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                             boost::multiprecision::et_off>;

inline std::size_t byte_length(const BigInt& v) {
  return v == 0 ? 0 : (boost::multiprecision::msb(v) / 8) + 1;
}

/// Big-endian bytes to non-negative integer.
inline BigInt bytes_to_int(ByteView bytes) {
  BigInt out;
  if (!bytes.empty()) mpz_import(out.backend().data(), bytes.size(), 1, 1, 1, 0, bytes.data());
  return out;
}

/// Big-endian, left-padded with zero bytes to exactly `width` bytes.
inline Bytes int_to_bytes(const BigInt& value, std::size_t width) {
  if (value < 0) throw Error(Errc::Overflow, "negative value");
  Bytes raw(byte_length(value));
  if (!raw.empty()) {
    std::size_t written = 0;
    mpz_export(raw.data(), &written, 1, 1, 1, 0, value.backend().data());
    raw.resize(written);
  }
  if (raw.size() > width) {
    throw Error(Errc::Overflow,
                "value needs " + std::to_string(raw.size()) + " bytes, width is " + std::to_string(width));
  }
  Bytes out(width - raw.size(), 0);
  append(out, raw);
  return out;
}

inline std::size_t bit_length(const BigInt& v) {
  return v == 0 ? 0 : boost::multiprecision::msb(v) + 1;
}

inline std::string to_hex(const BigInt& v) {
  std::string s = v.str(0, std::ios_base::hex);
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline BigInt bigint_from_hex(std::string_view hex) {
  if (hex.empty()) throw Error(Errc::ParseError, "empty hex integer");
  Bytes raw = from_hex(hex.size() % 2 ? "0" + std::string(hex) : std::string(hex));
  return bytes_to_int(raw);
}

/// Modular inverse; returns 0 when gcd(a, n) != 1.
inline BigInt mod_inverse(const BigInt& a, const BigInt& n) {
  BigInt out;
  if (mpz_invert(out.backend().data(), a.backend().data(), n.backend().data()) == 0) return 0;
  return out;
}

}  // namespace bpv
