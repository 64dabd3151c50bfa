#pragma once

#include <atomic>
#include <istream>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bpv/bigint.hpp"
#include "bpv/blindsig.hpp"
#include "bpv/board.hpp"
#include "bpv/election.hpp"
#include "bpv/error.hpp"
#include "bpv/identity.hpp"

namespace bpv {

struct AuthorityOptions {
  /// Enables corrupt_sign. Only the attack harness turns this on.
  bool adversarial = false;
};

/// The signing authority: keeps the eligible-voter registry, grants each
/// voter exactly one blind signature, and logs the voter-signed request
/// behind every honest signature.
///
/// The authority only ever sees blinded values. Nothing in its state can be
/// linked to an unblinded ballot.
class Authority {
 public:
  Authority(ElectionConfig config, BlindKeyPair key, Registry registry, AuthorityOptions options = {})
      : config_(std::move(config)),
        key_(std::move(key)),
        registry_(std::move(registry)),
        options_(options) {}

  Authority(const Authority&) = delete;
  Authority& operator=(const Authority&) = delete;

  const ElectionConfig& config() const noexcept { return config_; }
  PublicKey public_key() const { return key_.public_key(); }
  const Registry& registry() const noexcept { return registry_; }

  /// Verifies and records the request, then returns the blinded signature
  /// as modulus-width big-endian bytes. A rejected request leaves no trace,
  /// so the voter may retry after a transmission error.
  Bytes handle_request(const SigningRequest& req) {
    const BlindedMessage blinded = admit(req);
    return int_to_bytes(sign_blinded(key_, blinded).value, key_.modulus_bytes());
  }

  bool has_requested(const std::string& voter_id) const {
    std::shared_lock lock(mu_);
    return by_voter_.count(voter_id) != 0;
  }

  /// Append-ordered snapshot of every accepted request.
  std::vector<SigningRequest> export_request_log() const {
    std::shared_lock lock(mu_);
    return log_;
  }

  /// Same snapshot, additionally publishing every request not yet on the
  /// board as a REQUEST record.
  std::vector<SigningRequest> export_request_log(Board& board) {
    std::unique_lock lock(mu_);
    std::vector<std::pair<RecordKind, Bytes>> items;
    for (std::size_t i = published_; i < log_.size(); ++i) {
      const std::string line = format_request(log_[i]);
      items.emplace_back(RecordKind::Request, Bytes(line.begin(), line.end()));
    }
    if (!items.empty()) board.append_batch(items);
    published_ = log_.size();
    return log_;
  }

  /// Adversarial: signs without any request on record.
  Bytes corrupt_sign(const BlindedMessage& b) {
    if (!options_.adversarial) throw Error(Errc::AdversarialDisabled, "corrupt_sign outside adversarial mode");
    Bytes out = int_to_bytes(sign_blinded(key_, b).value, key_.modulus_bytes());
    ++issued_;
    return out;
  }

  /// Every signature handed out, including corrupt ones.
  std::size_t issued_count() const noexcept { return issued_.load(); }

  std::size_t log_size() const {
    std::shared_lock lock(mu_);
    return log_.size();
  }

  /// Re-admits previously logged requests (persisted state). Each one is
  /// re-verified; no signatures are produced. Restored requests count as
  /// already published.
  void restore_log(const std::vector<SigningRequest>& log) {
    for (const auto& req : log) admit(req);
    std::unique_lock lock(mu_);
    published_ = log_.size();
  }

  /// Text dump of the whole mutable state, one request per line.
  std::string serialize_state() const {
    std::shared_lock lock(mu_);
    std::string out = "ISSUED " + std::to_string(issued_.load()) + "\n";
    for (const auto& req : log_) out += format_request(req) + "\n";
    return out;
  }

 private:
  BlindedMessage admit(const SigningRequest& req) {
    if (auto v = verify_request(registry_, req); !v) throw Error(*v.failure, req.voter_id);
    if (req.election_id != config_.id()) throw Error(Errc::WrongElection, to_hex(req.election_id));
    if (req.blinded.size() != key_.modulus_bytes())
      throw Error(Errc::MessageOutOfRange, "blinded value has wrong width");
    BlindedMessage blinded{bytes_to_int(req.blinded)};
    if (blinded.value >= key_.n) throw Error(Errc::MessageOutOfRange, "blinded value not below N");

    std::unique_lock lock(mu_);
    if (!by_voter_.emplace(req.voter_id, log_.size()).second)
      throw Error(Errc::AlreadyRequested, req.voter_id);
    log_.push_back(req);
    ++issued_;
    return blinded;
  }

  const ElectionConfig config_;
  const BlindKeyPair key_;
  const Registry registry_;
  const AuthorityOptions options_;

  mutable std::shared_mutex mu_;
  std::vector<SigningRequest> log_;
  std::map<std::string, std::size_t> by_voter_;
  std::size_t published_ = 0;
  std::atomic<std::size_t> issued_{0};
};

/// Mailbox framing. Each `REQ ...` line yields one `RSP OK <blindedsig hex>`
/// or `RSP ERR <code>` line, in order.
inline std::string process_mailbox(Authority& authority, std::istream& in) {
  std::string out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    try {
      const Bytes sig = authority.handle_request(parse_request(line));
      out += "RSP OK " + to_hex(sig) + "\n";
    } catch (const Error& e) {
      out += "RSP ERR " + std::string(to_string(e.code())) + "\n";
    }
  }
  return out;
}

struct MailboxResponse {
  std::optional<Bytes> blinded_signature;
  std::optional<Errc> error;
};

inline MailboxResponse parse_response(std::string_view line) {
  std::istringstream ls{std::string(line)};
  std::string tag, status, value, extra;
  if (!(ls >> tag >> status >> value) || tag != "RSP" || (ls >> extra))
    throw Error(Errc::ParseError, "malformed RSP line");
  if (status == "OK") return {from_hex(value), std::nullopt};
  if (status == "ERR") {
    for (int c = 0; c <= static_cast<int>(Errc::Usage); ++c) {
      if (to_string(static_cast<Errc>(c)) == value) return {std::nullopt, static_cast<Errc>(c)};
    }
  }
  throw Error(Errc::ParseError, "malformed RSP line");
}

}  // namespace bpv
