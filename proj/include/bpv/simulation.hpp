#pragma once

// In-process election driver: issues credentials, runs every voter through
// the blind-signature pipeline against one authority, optionally lets the
// authority stuff ballots or the post lose some, then tallies and audits.

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "bpv/authority.hpp"
#include "bpv/ballot_codec.hpp"
#include "bpv/blindsig.hpp"
#include "bpv/board.hpp"
#include "bpv/election.hpp"
#include "bpv/identity.hpp"
#include "bpv/legacy.hpp"
#include "bpv/random.hpp"
#include "bpv/tally.hpp"
#include "bpv/voter.hpp"

namespace bpv {

struct ElectionPlan {
  std::vector<std::pair<std::string, VoteSelection>> voters;
  std::size_t corrupt_signatures = 0;  ///< ballots the authority signs with no request
  std::size_t lost_ballots = 0;        ///< honest ballots never mailed
};

struct ElectionOutcome {
  Registry registry;
  std::vector<CastResult> casts;
  std::vector<SigningRequest> request_log;
  BallotBox box;
  VoteCounts ground_truth;  ///< counts of every ballot actually mailed
  TallyResult tally;
  AuditReport audit;
};

/// Forges one authority-signed ballot without any voter request.
inline std::string forge_ballot(Authority& authority, const ElectionConfig& config, const VoteSelection& sel,
                                Rng& rng) {
  const PublicKey pk = authority.public_key();
  const EncodedBallot block = encode(sel, rng.bytes<kNonceBytes>());
  const BigInt m = bytes_to_int(pad(block, config.id(), pk.modulus_bytes()));
  const BlindingFactor r = sample_blinding_factor(pk, rng);
  const Bytes blinded_sig = authority.corrupt_sign(blind(pk, m, r));
  return make_payload(pk, unblind(pk, bytes_to_int(blinded_sig), r));
}

inline ElectionOutcome run_blind_election(const ElectionConfig& config, const BlindKeyPair& key,
                                          const ElectionPlan& plan, Rng& rng, Board* board = nullptr) {
  ElectionOutcome out;
  CredentialIssuer issuer;
  std::vector<VoterCredential> creds;
  creds.reserve(plan.voters.size());
  Rng cred_rng = rng.split("credentials");
  for (const auto& [id, sel] : plan.voters) {
    creds.push_back(issuer.issue(id, cred_rng));
    out.registry.add(creds.back());
  }

  Authority authority(config, key, out.registry, {.adversarial = plan.corrupt_signatures > 0});
  const AuthorityChannel channel = direct_channel(authority);
  const PublicKey pk = key.public_key();
  Rng vote_rng = rng.split("voters");
  for (std::size_t i = 0; i < plan.voters.size(); ++i)
    out.casts.push_back(prepare_and_cast(config, pk, creds[i], plan.voters[i].second, channel, vote_rng));

  std::vector<bool> lost(plan.voters.size(), false);
  Rng post_rng = rng.split("post");
  std::vector<std::size_t> order(plan.voters.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < std::min(plan.lost_ballots, order.size()); ++i) {
    std::swap(order[i], order[i + post_rng.uniform(order.size() - i)]);
    lost[order[i]] = true;
  }

  out.ground_truth = VoteCounts::zero(config);
  for (std::size_t i = 0; i < plan.voters.size(); ++i) {
    if (lost[i]) continue;
    out.box.add(out.casts[i].ballot.payload);
    out.ground_truth.add(plan.voters[i].second);
  }
  Rng forge_rng = rng.split("forgery");
  for (std::size_t i = 0; i < plan.corrupt_signatures; ++i) {
    const VoteSelection sel = legacy::random_selection(config, forge_rng);
    out.box.add(forge_ballot(authority, config, sel, forge_rng));
    out.ground_truth.add(sel);
  }

  out.request_log = board ? authority.export_request_log(*board) : authority.export_request_log();
  out.tally = tally(pk, config, out.box);
  out.audit = eligibility_audit(out.registry, out.request_log, out.tally, config.id());
  if (board) publish_tally(*board, config, out.tally, out.audit);
  return out;
}

/// Plan for the same population a legacy scenario uses.
inline ElectionPlan plan_from_scenario(const ElectionConfig& config, const legacy::Scenario& s) {
  ElectionPlan plan;
  for (auto& v : legacy::scenario_population(config, s)) plan.voters.emplace_back(v.voter_id, v.selection);
  return plan;
}

}  // namespace bpv
