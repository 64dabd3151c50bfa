#pragma once

// Simulated national eID: each voter holds an Ed25519 credential and signs
// the blinded value it submits to the authority. The signed requests are
// the evidence the eligibility audit counts.

#include <sodium.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <string_view>

#include "bpv/bytes.hpp"
#include "bpv/election.hpp"
#include "bpv/error.hpp"
#include "bpv/random.hpp"

namespace bpv {

using CredentialPublicKey = std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES>;
using CredentialSignature = std::array<std::uint8_t, crypto_sign_BYTES>;
using CredentialSeed = std::array<std::uint8_t, crypto_sign_SEEDBYTES>;

/// Voter ids travel in whitespace-separated text records and `|`-separated
/// board lines, so they are restricted to printable, separator-free ASCII.
inline bool is_valid_voter_id(std::string_view id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return c > ' ' && c < 0x7f && c != '|';
  });
}

class VoterCredential {
 public:
  VoterCredential(std::string voter_id, const CredentialSeed& seed)
      : voter_id_(std::move(voter_id)), seed_(seed) {
    if (!is_valid_voter_id(voter_id_)) throw Error(Errc::InvariantViolation, "malformed voter id");
    detail::ensure_sodium();
    crypto_sign_seed_keypair(public_key_.data(), secret_key_.data(), seed_.data());
  }

  const std::string& voter_id() const noexcept { return voter_id_; }
  const CredentialPublicKey& public_key() const noexcept { return public_key_; }
  const CredentialSeed& seed() const noexcept { return seed_; }

  CredentialSignature sign(ByteView message) const {
    CredentialSignature sig{};
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), secret_key_.data());
    return sig;
  }

 private:
  std::string voter_id_;
  CredentialSeed seed_;
  CredentialPublicKey public_key_{};
  std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> secret_key_{};
};

inline bool verify_credential_signature(const CredentialPublicKey& pk, ByteView message,
                                        const CredentialSignature& sig) {
  detail::ensure_sodium();
  return crypto_sign_verify_detached(sig.data(), message.data(), message.size(), pk.data()) == 0;
}

/// Stand-in for eID issuance; refuses to issue the same voter id twice.
class CredentialIssuer {
 public:
  VoterCredential issue(const std::string& voter_id, Rng& rng) {
    if (!issued_.insert(voter_id).second) throw Error(Errc::DuplicateVoterId, voter_id);
    return VoterCredential(voter_id, rng.bytes<crypto_sign_SEEDBYTES>());
  }

 private:
  std::set<std::string> issued_;
};

/// voter_id -> credential public key. Reads take consistent snapshots.
class Registry {
 public:
  using Map = std::map<std::string, CredentialPublicKey>;

  Registry() = default;
  Registry(const Registry& other) : entries_(other.snapshot()) {}
  Registry& operator=(const Registry& other) {
    if (this != &other) {
      Map copy = other.snapshot();
      std::unique_lock lock(mu_);
      entries_ = std::move(copy);
    }
    return *this;
  }

  void add(const std::string& voter_id, const CredentialPublicKey& pk) {
    if (!is_valid_voter_id(voter_id)) throw Error(Errc::InvariantViolation, "malformed voter id");
    std::unique_lock lock(mu_);
    if (!entries_.emplace(voter_id, pk).second) throw Error(Errc::DuplicateVoterId, voter_id);
  }

  void add(const VoterCredential& cred) { add(cred.voter_id(), cred.public_key()); }

  std::optional<CredentialPublicKey> find(const std::string& voter_id) const {
    std::shared_lock lock(mu_);
    auto it = entries_.find(voter_id);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(const std::string& voter_id) const { return find(voter_id).has_value(); }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
  }

  Map snapshot() const {
    std::shared_lock lock(mu_);
    return entries_;
  }

 private:
  mutable std::shared_mutex mu_;
  Map entries_;
};

inline std::string format_registry(const Registry& registry) {
  std::string out;
  for (const auto& [id, pk] : registry.snapshot()) out += "VOTER " + id + " " + to_hex(pk) + "\n";
  return out;
}

inline Registry parse_registry(std::istream& in) {
  Registry registry;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag, id, hex, extra;
    if (!(ls >> tag >> id >> hex) || tag != "VOTER" || (ls >> extra))
      throw Error(Errc::ParseError, "registry line " + std::to_string(lineno));
    registry.add(id, fixed_from_hex<crypto_sign_PUBLICKEYBYTES>(hex));
  }
  return registry;
}

inline Registry load_registry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  return parse_registry(in);
}

// ---------------------------------------------------------------------------
// Signing requests

/// A blinded ballot submitted for blind signing, authenticated by the voter.
/// `blinded` is the modulus-width big-endian encoding of the blinded value.
struct SigningRequest {
  std::string voter_id;
  ElectionId election_id{};
  Bytes blinded;
  CredentialSignature signature{};

  bool operator==(const SigningRequest&) const = default;
};

/// Bytes covered by the credential signature: a domain tag, then
/// election id and blinded value.
inline Bytes request_signing_bytes(const ElectionId& election_id, ByteView blinded) {
  Bytes msg;
  append(msg, as_bytes("BPV-REQ"));
  append(msg, election_id);
  append(msg, blinded);
  return msg;
}

inline SigningRequest sign_request(const VoterCredential& cred, const ElectionId& election_id,
                                   Bytes blinded) {
  SigningRequest req{cred.voter_id(), election_id, std::move(blinded), {}};
  req.signature = cred.sign(request_signing_bytes(req.election_id, req.blinded));
  return req;
}

struct RequestVerdict {
  std::optional<Errc> failure;

  bool ok() const noexcept { return !failure.has_value(); }
  explicit operator bool() const noexcept { return ok(); }
};

inline RequestVerdict verify_request(const Registry& registry, const SigningRequest& req) {
  auto pk = registry.find(req.voter_id);
  if (!pk) return {Errc::UnknownVoter};
  if (!verify_credential_signature(*pk, request_signing_bytes(req.election_id, req.blinded),
                                   req.signature))
    return {Errc::BadSignature};
  return {};
}

/// Text framing: `REQ <voter_id> <election_id hex> <blinded hex> <sig hex>`.
inline std::string format_request(const SigningRequest& req) {
  return "REQ " + req.voter_id + " " + to_hex(req.election_id) + " " + to_hex(req.blinded) + " " +
         to_hex(req.signature);
}

inline SigningRequest parse_request(std::string_view line) {
  std::istringstream ls{std::string(line)};
  std::string tag, id, eid, blinded, sig, extra;
  if (!(ls >> tag >> id >> eid >> blinded >> sig) || tag != "REQ" || (ls >> extra))
    throw Error(Errc::ParseError, "malformed REQ line");
  if (!is_valid_voter_id(id)) throw Error(Errc::ParseError, "malformed voter id");
  return {id, fixed_from_hex<8>(eid), from_hex(blinded),
          fixed_from_hex<crypto_sign_BYTES>(sig)};
}

}  // namespace bpv
