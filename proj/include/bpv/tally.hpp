#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bpv/authority.hpp"
#include "bpv/blindsig.hpp"
#include "bpv/board.hpp"
#include "bpv/election.hpp"
#include "bpv/error.hpp"
#include "bpv/identity.hpp"
#include "bpv/voter.hpp"

namespace bpv {

/// Received payload lines in arrival order. Append-only.
class BallotBox {
 public:
  BallotBox() = default;
  explicit BallotBox(std::vector<std::string> payloads) : payloads_(std::move(payloads)) {}

  void add(std::string payload) { payloads_.push_back(std::move(payload)); }
  const std::vector<std::string>& payloads() const noexcept { return payloads_; }
  std::size_t size() const noexcept { return payloads_.size(); }

 private:
  std::vector<std::string> payloads_;
};

inline BallotBox parse_ballot_box(std::istream& in) {
  BallotBox box;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) box.add(line);
  }
  return box;
}

/// Per-party and per-candidate counts over accepted ballots.
struct VoteCounts {
  std::vector<std::uint64_t> party_votes;
  std::vector<std::vector<std::uint64_t>> candidate_for;

  static VoteCounts zero(const ElectionConfig& config) {
    VoteCounts c;
    for (const Party& p : config.parties()) {
      c.party_votes.push_back(0);
      c.candidate_for.emplace_back(p.candidates.size(), 0);
    }
    return c;
  }

  void add(const VoteSelection& sel) {
    ++party_votes.at(sel.party_index);
    for (std::size_t c : sel.approvals) ++candidate_for.at(sel.party_index).at(c);
  }

  bool operator==(const VoteCounts&) const = default;
};

struct RejectedBallot {
  std::size_t position = 0;
  Errc reason = Errc::BadFraming;
  std::string detail;
  bool operator==(const RejectedBallot&) const = default;
};

struct DuplicateBallot {
  std::size_t position = 0;
  std::size_t first_position = 0;
  bool operator==(const DuplicateBallot&) const = default;
};

struct TallyResult {
  VoteCounts counts;
  std::uint64_t accepted = 0;
  std::vector<RejectedBallot> rejected;
  std::vector<DuplicateBallot> duplicates;
  std::vector<std::size_t> accepted_positions;  ///< box positions counted, in box order
  std::vector<PayloadDigest> accepted_digests;  ///< parallel to accepted_positions

  bool operator==(const TallyResult&) const = default;
};

struct TallyOptions {
  /// Verification workers; 0 picks hardware concurrency.
  unsigned threads = 1;
};

/// Verifies every payload, drops byte-identical repeats of an accepted
/// signature (first occurrence wins), and counts the rest. Verification may
/// run in parallel; aggregation is in box order, so the result does not
/// depend on the thread count.
inline TallyResult tally(const PublicKey& pk, const ElectionConfig& config, const BallotBox& box,
                         TallyOptions options = {}) {
  struct Outcome {
    std::optional<VoteSelection> selection;
    Errc reason = Errc::BadFraming;
    std::string detail;
  };
  const auto& lines = box.payloads();
  std::vector<Outcome> outcomes(lines.size());
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < lines.size(); i += step) {
      try {
        outcomes[i].selection = verify_ballot(pk, config, lines[i]);
      } catch (const Error& e) {
        outcomes[i].reason = e.code();
        outcomes[i].detail = e.detail();
      }
    }
  };
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, lines.size())));
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }

  TallyResult out;
  out.counts = VoteCounts::zero(config);
  std::unordered_map<std::string_view, std::size_t> first_seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const Outcome& o = outcomes[i];
    if (!o.selection) {
      out.rejected.push_back({i, o.reason, o.detail});
      continue;
    }
    // Payload text is canonical, so equal text <=> equal signature bytes.
    auto [it, fresh] = first_seen.emplace(lines[i], i);
    if (!fresh) {
      out.duplicates.push_back({i, it->second});
      continue;
    }
    out.counts.add(*o.selection);
    ++out.accepted;
    out.accepted_positions.push_back(i);
    out.accepted_digests.push_back(payload_digest(lines[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Eligibility audit

struct AuditReport {
  std::uint64_t requests_total = 0;
  std::uint64_t requests_valid = 0;
  std::uint64_t ballots_valid = 0;
  bool cheat_flag = false;
  std::int64_t discrepancy = 0;  ///< ballots_valid - requests_valid

  bool operator==(const AuditReport&) const = default;
};

/// Counts distinct voters with a valid request for this election and flags
/// the authority when accepted ballots exceed them. Only an excess is a
/// verdict; fewer ballots than requests (unmailed or lost ballots) is
/// reported through `discrepancy` alone.
inline AuditReport eligibility_audit(const Registry& registry, const std::vector<SigningRequest>& log,
                                     const TallyResult& tally_result, const ElectionId& election_id) {
  const Registry snapshot = registry;
  std::set<std::string> voters;
  AuditReport r;
  r.requests_total = log.size();
  for (const auto& req : log) {
    if (req.election_id == election_id && verify_request(snapshot, req)) voters.insert(req.voter_id);
  }
  r.requests_valid = voters.size();
  r.ballots_valid = tally_result.accepted;
  r.discrepancy = static_cast<std::int64_t>(r.ballots_valid) - static_cast<std::int64_t>(r.requests_valid);
  r.cheat_flag = r.ballots_valid > r.requests_valid;
  return r;
}

// ---------------------------------------------------------------------------
// Polling-station gate

enum class GateVerdict { Allow, Block };

constexpr std::string_view to_string(GateVerdict v) noexcept { return v == GateVerdict::Allow ? "ALLOW" : "BLOCK"; }

struct GateDecision {
  GateVerdict verdict = GateVerdict::Block;
  std::optional<Errc> annotation;  ///< UnknownVoter or LookupUnavailable
};

struct GatePolicy {
  /// What to do when the authority's request log cannot be consulted.
  bool fail_open = false;
};

/// BLOCK iff the voter already obtained a postal-ballot signature. Unknown
/// voters are blocked. A missing log fails closed unless the policy says
/// otherwise; either way the decision is annotated.
inline GateDecision polling_gate(const Registry& registry, const std::vector<SigningRequest>* log,
                                 const std::string& voter_id, GatePolicy policy = {}) {
  if (!registry.contains(voter_id)) return {GateVerdict::Block, Errc::UnknownVoter};
  if (log == nullptr)
    return {policy.fail_open ? GateVerdict::Allow : GateVerdict::Block, Errc::LookupUnavailable};
  const bool requested = std::any_of(log->begin(), log->end(),
                                     [&](const SigningRequest& r) { return r.voter_id == voter_id; });
  return {requested ? GateVerdict::Block : GateVerdict::Allow, std::nullopt};
}

inline GateDecision polling_gate(const Authority& authority, const std::string& voter_id) {
  if (!authority.registry().contains(voter_id)) return {GateVerdict::Block, Errc::UnknownVoter};
  return {authority.has_requested(voter_id) ? GateVerdict::Block : GateVerdict::Allow, std::nullopt};
}

// ---------------------------------------------------------------------------
// Reports and publication

inline std::string format_tally_report(const ElectionConfig& config, const TallyResult& t) {
  std::string out;
  out += "TALLY " + to_hex(config.id()) + "\n";
  out += "ballots " + std::to_string(t.accepted + t.rejected.size() + t.duplicates.size()) + "\n";
  out += "accepted " + std::to_string(t.accepted) + "\n";
  out += "rejected " + std::to_string(t.rejected.size()) + "\n";
  out += "duplicates " + std::to_string(t.duplicates.size()) + "\n";
  for (const Party& p : config.parties()) {
    out += "party " + std::to_string(p.index) + " " + std::to_string(t.counts.party_votes[p.index]) + " " +
           p.name + "\n";
    for (std::size_t c = 0; c < p.candidates.size(); ++c) {
      out += "  cand " + std::to_string(c) + " " + std::to_string(t.counts.candidate_for[p.index][c]) + " " +
             p.candidates[c] + "\n";
    }
  }
  for (const auto& r : t.rejected)
    out += "reject " + std::to_string(r.position) + " " + std::string(to_string(r.reason)) + "\n";
  for (const auto& d : t.duplicates)
    out += "duplicate " + std::to_string(d.position) + " of " + std::to_string(d.first_position) + "\n";
  return out;
}

inline std::string format_audit_report(const AuditReport& a) {
  std::string out = "AUDIT\n";
  out += "requests_total " + std::to_string(a.requests_total) + "\n";
  out += "requests_valid " + std::to_string(a.requests_valid) + "\n";
  out += "ballots_valid " + std::to_string(a.ballots_valid) + "\n";
  out += "discrepancy " + std::to_string(a.discrepancy) + "\n";
  out += std::string("cheat_flag ") + (a.cheat_flag ? "true" : "false") + "\n";
  return out;
}

/// Appends one BALLOT_DIGEST record per accepted ballot, then TALLY and AUDIT.
inline std::vector<BoardRecord> publish_tally(Board& board, const ElectionConfig& config,
                                              const TallyResult& t, const AuditReport& audit) {
  std::vector<std::pair<RecordKind, Bytes>> items;
  for (const auto& d : t.accepted_digests) items.emplace_back(RecordKind::BallotDigest, Bytes(d.begin(), d.end()));
  const std::string tally_text = format_tally_report(config, t);
  const std::string audit_text = format_audit_report(audit);
  items.emplace_back(RecordKind::Tally, Bytes(tally_text.begin(), tally_text.end()));
  items.emplace_back(RecordKind::Audit, Bytes(audit_text.begin(), audit_text.end()));
  try {
    return board.append_batch(items);
  } catch (const Error& e) {
    throw Error(Errc::BoardWriteFailure, e.what());
  }
}

/// Board sequence number of the BALLOT_DIGEST record matching a note sheet.
inline std::optional<std::uint64_t> find_ballot_digest(const Board& board, const PayloadDigest& digest) {
  for (const auto& rec : board.records()) {
    if (rec.kind == RecordKind::BallotDigest && std::equal(rec.payload.begin(), rec.payload.end(),
                                                           digest.begin(), digest.end()))
      return rec.seq;
  }
  return std::nullopt;
}

}  // namespace bpv
