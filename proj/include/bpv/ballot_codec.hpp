#pragma once

// Fixed 256-bit ballot block and its deterministic, hash-free padding.
//
// Ballot block (32 bytes):
//   [0]       format version, 0x01
//   [1..=8]   nonce, 8 random bytes
//   [9]       party index
//   [10..=28] candidate approval bitmask, 152 bits; candidate i is bit (i % 8),
//             least-significant first, of byte 10 + i / 8
//   [29..=31] reserved, zero
//
// Padded message (k = modulus byte length, k >= 44):
//   0x00 | 0x56 | election id (8) | 0xFF * (k - 43) | 0x00 | ballot block (32)
//
// The padded message is signed directly, without hashing. The leading zero
// byte keeps its integer value below the modulus, and the rigid layout lets
// a verifier reject any recovered value that is not a well-formed message.
// The layout is this project's own choice; nothing outside it prescribes
// these offsets.

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "bpv/bigint.hpp"
#include "bpv/bytes.hpp"
#include "bpv/election.hpp"
#include "bpv/error.hpp"

namespace bpv {

inline constexpr std::size_t kBallotBytes = 32;
inline constexpr std::size_t kNonceBytes = 8;
inline constexpr std::uint8_t kBallotVersion = 0x01;
inline constexpr std::size_t kVersionOffset = 0;
inline constexpr std::size_t kNonceOffset = 1;
inline constexpr std::size_t kPartyOffset = 9;
inline constexpr std::size_t kMaskOffset = 10;
inline constexpr std::size_t kMaskBytes = 19;
inline constexpr std::size_t kReservedOffset = 29;

inline constexpr std::uint8_t kPadTag = 0x56;
inline constexpr std::size_t kPadOverhead = 1 + 1 + 8 + 1 + kBallotBytes;  // 43
inline constexpr std::size_t kMinModulusBytes = kPadOverhead + 1;          // 44

static_assert(kBallotBytes * 8 == 256);
static_assert(kMaskBytes * 8 == kMaxCandidates);
static_assert(kMaxParties <= 0xFF, "party index must fit one byte");
static_assert(kReservedOffset == kMaskOffset + kMaskBytes);
static_assert(kReservedOffset + 3 == kBallotBytes);
static_assert(kPartyOffset == kNonceOffset + kNonceBytes);

using Nonce = std::array<std::uint8_t, kNonceBytes>;

struct EncodedBallot {
  std::array<std::uint8_t, kBallotBytes> bytes{};

  bool operator==(const EncodedBallot&) const = default;
};

struct DecodedBallot {
  VoteSelection selection;
  Nonce nonce{};

  bool operator==(const DecodedBallot&) const = default;
};

/// Precondition: `sel` validated against the active config.
inline EncodedBallot encode(const VoteSelection& sel, const Nonce& nonce) {
  EncodedBallot out;
  auto& b = out.bytes;
  b[kVersionOffset] = kBallotVersion;
  std::copy(nonce.begin(), nonce.end(), b.begin() + kNonceOffset);
  b[kPartyOffset] = static_cast<std::uint8_t>(sel.party_index);
  for (std::size_t c : sel.approvals)
    b[kMaskOffset + c / 8] |= static_cast<std::uint8_t>(1u << (c % 8));
  return out;
}

inline DecodedBallot decode(const EncodedBallot& ballot, const ElectionConfig& config) {
  const auto& b = ballot.bytes;
  if (b[kVersionOffset] != kBallotVersion)
    throw Error(Errc::BadVersion, "version byte " + std::to_string(b[kVersionOffset]));
  for (std::size_t i = kReservedOffset; i < kBallotBytes; ++i) {
    if (b[i] != 0) throw Error(Errc::ReservedNonZero, "reserved byte " + std::to_string(i));
  }
  DecodedBallot out;
  std::copy_n(b.begin() + kNonceOffset, kNonceBytes, out.nonce.begin());
  out.selection.party_index = b[kPartyOffset];
  if (out.selection.party_index >= config.parties().size())
    throw Error(Errc::PartyOutOfRange, "party " + std::to_string(out.selection.party_index));
  const std::size_t count = config.party(out.selection.party_index).candidates.size();
  for (std::size_t bit = 0; bit < kMaxCandidates; ++bit) {
    if ((b[kMaskOffset + bit / 8] >> (bit % 8)) & 1u) {
      if (bit >= count)
        throw Error(Errc::StrayApprovalBit, "bit " + std::to_string(bit) + " beyond " +
                                                std::to_string(count) + " candidates");
      out.selection.approvals.insert(bit);
    }
  }
  return out;
}

inline Bytes pad(const EncodedBallot& ballot, const ElectionId& election_id, std::size_t modulus_len) {
  if (modulus_len < kMinModulusBytes)
    throw Error(Errc::ModulusTooSmall, "modulus of " + std::to_string(modulus_len) +
                                           " bytes, need at least " +
                                           std::to_string(kMinModulusBytes));
  Bytes out;
  out.reserve(modulus_len);
  out.push_back(0x00);
  out.push_back(kPadTag);
  append(out, election_id);
  out.insert(out.end(), modulus_len - kPadOverhead, 0xFF);
  out.push_back(0x00);
  append(out, ballot.bytes);
  return out;
}

inline EncodedBallot unpad(ByteView padded, const ElectionId& expected_election_id) {
  const std::size_t k = padded.size();
  if (k < kMinModulusBytes) throw Error(Errc::BadStructure, "message too short");
  if (padded[0] != 0x00 || padded[1] != kPadTag) throw Error(Errc::BadStructure, "bad header");
  const std::size_t sep = k - kBallotBytes - 1;
  for (std::size_t i = 2 + 8; i < sep; ++i) {
    if (padded[i] != 0xFF) throw Error(Errc::BadStructure, "bad filler at byte " + std::to_string(i));
  }
  if (padded[sep] != 0x00) throw Error(Errc::BadStructure, "missing separator");
  if (!std::equal(expected_election_id.begin(), expected_election_id.end(), padded.begin() + 2))
    throw Error(Errc::WrongElection, "election id " + to_hex(padded.subspan(2, 8)));
  EncodedBallot out;
  std::copy_n(padded.begin() + sep + 1, kBallotBytes, out.bytes.begin());
  return out;
}

}  // namespace bpv
