#pragma once

// The voter's device: fill in, encode, blind, obtain the authority's
// signature, unblind, check, and print. Also the verification app that
// decodes a printed payload back into the vote it carries.

#include <array>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bpv/authority.hpp"
#include "bpv/ballot_codec.hpp"
#include "bpv/bigint.hpp"
#include "bpv/blindsig.hpp"
#include "bpv/bytes.hpp"
#include "bpv/election.hpp"
#include "bpv/error.hpp"
#include "bpv/identity.hpp"
#include "bpv/random.hpp"

namespace bpv {

inline constexpr std::string_view kPayloadPrefix = "BPV1|";

using PayloadDigest = std::array<std::uint8_t, 8>;

enum class Stance { For, Against };

constexpr std::string_view to_string(Stance s) noexcept { return s == Stance::For ? "FOR" : "AGAINST"; }

/// The printable ballot. `payload` is the machine-readable line
/// `BPV1|<base64url signature>`; the signature alone carries the vote.
struct BallotArtifact {
  std::string text;
  std::string payload;
  Nonce nonce{};
};

/// Pre-filled note sheet. The digest is the voter's handle for finding the
/// ballot on the bulletin board after tallying.
struct NoteSheet {
  ElectionId election_id{};
  std::string party;
  std::vector<std::pair<std::string, Stance>> stances;
  PayloadDigest payload_digest{};

  bool operator==(const NoteSheet&) const = default;
};

/// Everything the voter's device produces. There is no code sheet.
struct CastResult {
  BallotArtifact ballot;
  NoteSheet note;
};

/// Signs the request and returns the authority's blinded signature bytes.
using AuthorityChannel = std::function<Bytes(const SigningRequest&)>;

inline AuthorityChannel direct_channel(Authority& authority) {
  return [&authority](const SigningRequest& req) { return authority.handle_request(req); };
}

/// Raised when the authority's answer does not unblind to a valid signature
/// on the voter's ballot. Carries the exchange as evidence.
class LocalVerifyError : public Error {
 public:
  LocalVerifyError(std::string detail, SigningRequest request, Bytes response)
      : Error(Errc::LocalVerifyFailed, std::move(detail)),
        request_(std::move(request)),
        response_(std::move(response)) {}

  const SigningRequest& request() const noexcept { return request_; }
  const Bytes& response() const noexcept { return response_; }

 private:
  SigningRequest request_;
  Bytes response_;
};

// ---------------------------------------------------------------------------
// Payload framing

inline std::string make_payload(const PublicKey& pk, const Signature& s) {
  return std::string(kPayloadPrefix) + base64_encode(serialize_signature(pk, s), Base64Variant::UrlNoPadding);
}

inline Signature parse_payload(const PublicKey& pk, std::string_view line) {
  if (line.substr(0, kPayloadPrefix.size()) != kPayloadPrefix)
    throw Error(Errc::BadFraming, "payload prefix");
  Bytes raw;
  try {
    raw = base64_decode(line.substr(kPayloadPrefix.size()), Base64Variant::UrlNoPadding);
  } catch (const Error& e) {
    throw Error(Errc::BadFraming, e.detail());
  }
  if (raw.size() != pk.modulus_bytes()) throw Error(Errc::BadFraming, "signature width");
  Signature s{bytes_to_int(raw)};
  if (s.value >= pk.n) throw Error(Errc::BadFraming, "signature not below N");
  return s;
}

inline PayloadDigest payload_digest(std::string_view payload) {
  const Digest full = sha256(as_bytes(payload));
  PayloadDigest out{};
  std::copy_n(full.begin(), out.size(), out.begin());
  return out;
}

/// Verification app: payload -> signature -> padded message -> ballot.
inline DecodedBallot verify_ballot_full(const PublicKey& pk, const ElectionConfig& config,
                                        std::string_view payload) {
  const Signature s = parse_payload(pk, payload);
  const Bytes padded = int_to_bytes(verify_recover(pk, s), pk.modulus_bytes());
  const EncodedBallot block = unpad(padded, config.id());
  try {
    return decode(block, config);
  } catch (const Error& e) {
    throw Error(Errc::DecodeError, std::string(to_string(e.code())) + ": " + e.detail());
  }
}

inline VoteSelection verify_ballot(const PublicKey& pk, const ElectionConfig& config,
                                   std::string_view payload) {
  return verify_ballot_full(pk, config, payload).selection;
}

// ---------------------------------------------------------------------------
// Rendering

inline std::vector<std::pair<std::string, Stance>> stances_of(const ElectionConfig& config,
                                                              const VoteSelection& sel) {
  std::vector<std::pair<std::string, Stance>> out;
  const Party& party = config.party(sel.party_index);
  for (std::size_t c = 0; c < party.candidates.size(); ++c)
    out.emplace_back(party.candidates[c], sel.approvals.count(c) ? Stance::For : Stance::Against);
  return out;
}

inline std::string render_ballot_text(const ElectionConfig& config, const VoteSelection& sel,
                                      std::string_view payload) {
  std::string out;
  out += "BALLOT " + config.title() + "\n";
  out += "ELECTION " + to_hex(config.id()) + "\n";
  out += "PARTY " + config.party(sel.party_index).name + "\n";
  for (const auto& [name, stance] : stances_of(config, sel))
    out += std::string(to_string(stance)) + " " + name + "\n";
  out += std::string(payload) + "\n";
  return out;
}

inline std::string render_note_sheet(const NoteSheet& note) {
  std::string out = "NOTE SHEET\n";
  out += "ELECTION " + to_hex(note.election_id) + "\n";
  out += "PARTY " + note.party + "\n";
  for (const auto& [name, stance] : note.stances) out += std::string(to_string(stance)) + " " + name + "\n";
  out += "DIGEST " + to_hex(note.payload_digest) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Casting

/// State a voter keeps between sending the request and receiving the answer.
struct PendingCast {
  VoteSelection selection;
  Nonce nonce{};
  BigInt padded;  ///< padded ballot as an integer
  BigInt blinding_factor;
  SigningRequest request;
};

inline PendingCast begin_cast(const ElectionConfig& config, const PublicKey& pk,
                              const VoterCredential& cred, const VoteSelection& sel, Rng& rng) {
  require_valid(config, sel);
  PendingCast pending;
  pending.selection = sel;
  pending.nonce = rng.bytes<kNonceBytes>();
  const EncodedBallot block = encode(sel, pending.nonce);
  pending.padded = bytes_to_int(pad(block, config.id(), pk.modulus_bytes()));
  const BlindingFactor r = sample_blinding_factor(pk, rng);
  pending.blinding_factor = r.value();
  const BlindedMessage blinded = blind(pk, pending.padded, r);
  pending.request = sign_request(cred, config.id(), int_to_bytes(blinded.value, pk.modulus_bytes()));
  return pending;
}

inline CastResult finish_cast(const ElectionConfig& config, const PublicKey& pk,
                              const PendingCast& pending, const Bytes& response) {
  auto reject = [&](const std::string& why) -> LocalVerifyError {
    return LocalVerifyError(why, pending.request, response);
  };
  if (response.size() != pk.modulus_bytes()) throw reject("response has wrong width");
  const BigInt blinded_sig = bytes_to_int(response);
  if (blinded_sig >= pk.n) throw reject("response not below N");
  const Signature s = unblind(pk, blinded_sig, BlindingFactor(pk, pending.blinding_factor));
  if (verify_recover(pk, s) != pending.padded) throw reject("signature does not verify");

  CastResult out;
  out.ballot.payload = make_payload(pk, s);
  out.ballot.nonce = pending.nonce;
  out.ballot.text = render_ballot_text(config, pending.selection, out.ballot.payload);
  out.note.election_id = config.id();
  out.note.party = config.party(pending.selection.party_index).name;
  out.note.stances = stances_of(config, pending.selection);
  out.note.payload_digest = payload_digest(out.ballot.payload);
  return out;
}

/// Full voter pipeline. Authority errors propagate unchanged; a bad answer
/// raises LocalVerifyError before anything is rendered.
inline CastResult prepare_and_cast(const ElectionConfig& config, const PublicKey& pk,
                                   const VoterCredential& cred, const VoteSelection& sel,
                                   const AuthorityChannel& channel, Rng& rng) {
  const PendingCast pending = begin_cast(config, pk, cred, sel, rng);
  return finish_cast(config, pk, pending, channel(pending.request));
}

}  // namespace bpv
