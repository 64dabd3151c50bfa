#include <gtest/gtest.h>

#include <cstdlib>
#include <set>

#include "support/test_support.hpp"

namespace bpv {
namespace {

Errc error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Usage;
}

struct Booth {
  ElectionConfig config = test::small_config();
  const BlindKeyPair& key = test::key_512();
  PublicKey pk = key.public_key();
  Rng rng{404};
  CredentialIssuer issuer;
  Registry registry;
  std::vector<VoterCredential> voters;
  Authority authority;

  explicit Booth(int n = 4) : authority(config, key, make_registry(n)) {}

  Registry make_registry(int n) {
    for (int i = 0; i < n; ++i) {
      voters.push_back(issuer.issue("voter" + std::to_string(i), rng));
      registry.add(voters.back());
    }
    return registry;
  }

  CastResult cast(int voter, const VoteSelection& sel) {
    return prepare_and_cast(config, pk, voters.at(voter), sel, direct_channel(authority), rng);
  }
};

TEST(PrepareAndCast, HonestRoundTrip) {
  Booth b;
  const VoteSelection sel{0, {0, 2}};
  const CastResult r = b.cast(0, sel);
  EXPECT_EQ(r.ballot.payload.substr(0, 5), "BPV1|");
  EXPECT_EQ(verify_ballot(b.pk, b.config, r.ballot.payload), sel);
  EXPECT_EQ(verify_ballot_full(b.pk, b.config, r.ballot.payload).nonce, r.ballot.nonce);
  EXPECT_EQ(r.note.party, "Green List");
  EXPECT_EQ(r.note.payload_digest, payload_digest(r.ballot.payload));
  EXPECT_TRUE(b.authority.has_requested("voter0"));
}

TEST(PrepareAndCast, InvalidSelectionNeverReachesAuthority) {
  Booth b;
  EXPECT_EQ(error_of([&] { b.cast(0, {0, {3}}); }), Errc::CandidateOutOfRange);
  EXPECT_EQ(error_of([&] { b.cast(0, {2, {}}); }), Errc::PartyOutOfRange);
  EXPECT_FALSE(b.authority.has_requested("voter0"));
}

TEST(PrepareAndCast, GarbageResponseRaisesLocalVerifyWithEvidence) {
  Booth b;
  Rng junk(3);
  const Bytes garbage = int_to_bytes(detail::random_below(b.pk.n, junk), b.pk.modulus_bytes());
  std::optional<SigningRequest> seen;
  const AuthorityChannel liar = [&](const SigningRequest& req) {
    seen = req;
    return garbage;
  };
  try {
    prepare_and_cast(b.config, b.pk, b.voters[0], {1, {1}}, liar, b.rng);
    FAIL() << "expected LocalVerifyError";
  } catch (const LocalVerifyError& e) {
    EXPECT_EQ(e.code(), Errc::LocalVerifyFailed);
    ASSERT_TRUE(seen);
    EXPECT_EQ(e.request(), *seen);
    EXPECT_EQ(e.response(), garbage);
  }
}

TEST(PrepareAndCast, MalformedResponsesAreLocalVerifyFailures) {
  Booth b;
  const Bytes too_short(10, 1);
  const Bytes at_modulus = int_to_bytes(b.pk.n, b.pk.modulus_bytes());
  for (const Bytes& resp : {too_short, at_modulus}) {
    const AuthorityChannel ch = [&](const SigningRequest&) { return resp; };
    EXPECT_EQ(error_of([&] { prepare_and_cast(b.config, b.pk, b.voters[0], {0, {}}, ch, b.rng); }),
              Errc::LocalVerifyFailed);
  }
}

TEST(PrepareAndCast, SignatureWithWrongKeyIsCaught) {
  Booth b;
  Rng other_rng(5);
  const BlindKeyPair other = keygen(512, other_rng);
  const AuthorityChannel wrong_key = [&](const SigningRequest& req) {
    BigInt v = bytes_to_int(req.blinded) % other.n;
    return int_to_bytes(powm(v, other.d, other.n) % b.pk.n, b.pk.modulus_bytes());
  };
  EXPECT_EQ(error_of([&] { prepare_and_cast(b.config, b.pk, b.voters[0], {0, {1}}, wrong_key, b.rng); }),
            Errc::LocalVerifyFailed);
}

TEST(PrepareAndCast, AuthorityErrorsPropagateUnchanged) {
  Booth b;
  b.cast(1, {0, {}});
  EXPECT_EQ(error_of([&] { b.cast(1, {1, {}}); }), Errc::AlreadyRequested);
  Rng rng(6);
  const VoterCredential stranger("stranger", rng.bytes<32>());
  EXPECT_EQ(error_of([&] {
              prepare_and_cast(b.config, b.pk, stranger, {0, {}}, direct_channel(b.authority), b.rng);
            }),
            Errc::UnknownVoter);
}

TEST(PrepareAndCast, SameVoteDifferentVotersDifferentPayloads) {
  Booth b(1000);
  std::set<std::string> payloads;
  const VoteSelection sel{1, {0}};
  for (int i = 0; i < 1000; ++i) {
    const CastResult r = b.cast(i, sel);
    ASSERT_EQ(verify_ballot(b.pk, b.config, r.ballot.payload), sel);
    payloads.insert(r.ballot.payload);
  }
  EXPECT_EQ(payloads.size(), 1000u);
}

TEST(VerifyBallot, EveryFlippedCharacterIsRejected) {
  Booth b;
  const CastResult r = b.cast(0, {1, {0, 1, 2}});
  const std::string& good = r.ballot.payload;
  static constexpr std::string_view alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
  Rng rng(77);
  int rejected = 0;
  for (int i = 0; i < 100; ++i) {
    std::string bad = good;
    const std::size_t pos = kPayloadPrefix.size() + rng.uniform(good.size() - kPayloadPrefix.size());
    char c;
    do {
      c = alphabet[rng.uniform(alphabet.size())];
    } while (c == bad[pos]);
    bad[pos] = c;
    try {
      verify_ballot(b.pk, b.config, bad);
      ADD_FAILURE() << "accepted " << bad;
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == Errc::BadFraming || e.code() == Errc::BadStructure ||
                  e.code() == Errc::WrongElection || e.code() == Errc::DecodeError)
          << to_string(e.code());
      ++rejected;
    }
  }
  EXPECT_EQ(rejected, 100);
}

TEST(VerifyBallot, EverySignatureBitFlipIsRejected) {
  Booth b;
  const CastResult r = b.cast(0, {0, {1}});
  for (std::size_t bit = 0; bit < 512; ++bit)
    EXPECT_THROW(verify_ballot(b.pk, b.config, test::flip_signature_bit(b.pk, r.ballot.payload, bit)), Error)
        << bit;
}

TEST(VerifyBallot, CrossElectionBallotRejected) {
  Booth b;
  const CastResult r = b.cast(0, {0, {}});
  const ElectionConfig other = ElectionConfig::make(ElectionId{1, 1, 1, 1, 1, 1, 1, 1}, "Other",
                                                    {{"Green List", {"Ann", "Bert", "Cleo"}},
                                                     {"Blue List", {"Dirk", "Els", "Frans"}}});
  EXPECT_EQ(error_of([&] { verify_ballot(b.pk, other, r.ballot.payload); }), Errc::WrongElection);

  Rng rng(8);
  const BlindKeyPair other_key = keygen(512, rng);
  const Errc e = error_of([&] { verify_ballot(other_key.public_key(), b.config, r.ballot.payload); });
  EXPECT_TRUE(e == Errc::BadStructure || e == Errc::BadFraming) << to_string(e);
}

TEST(VerifyBallot, FramingErrors) {
  Booth b;
  const CastResult r = b.cast(0, {0, {}});
  const std::string body = r.ballot.payload.substr(kPayloadPrefix.size());
  EXPECT_EQ(error_of([&] { verify_ballot(b.pk, b.config, "BPV2|" + body); }), Errc::BadFraming);
  EXPECT_EQ(error_of([&] { verify_ballot(b.pk, b.config, body); }), Errc::BadFraming);
  EXPECT_EQ(error_of([&] { verify_ballot(b.pk, b.config, "BPV1|" + body + "="); }), Errc::BadFraming);
  EXPECT_EQ(error_of([&] { verify_ballot(b.pk, b.config, "BPV1|" + body.substr(4)); }), Errc::BadFraming);
  EXPECT_EQ(error_of([&] { verify_ballot(b.pk, b.config, "BPV1|" + body + "AAAA"); }), Errc::BadFraming);
  EXPECT_EQ(error_of([&] { verify_ballot(b.pk, b.config, ""); }), Errc::BadFraming);
}

TEST(VerifyBallot, SignedGarbageBlockIsDecodeError) {
  Booth b;
  EncodedBallot block = encode({0, {}}, Nonce{});
  block.bytes[9] = 7;  // party out of range, but correctly padded and signed
  const BigInt m = bytes_to_int(pad(block, b.config.id(), b.pk.modulus_bytes()));
  const std::string payload = make_payload(b.pk, sign_blinded(b.key, {m}));
  try {
    verify_ballot(b.pk, b.config, payload);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DecodeError);
    EXPECT_NE(e.detail().find("PartyOutOfRange"), std::string::npos) << e.detail();
  }
}

TEST(Render, StanceLinesForEveryCandidate) {
  Booth b;
  const CastResult r = b.cast(0, {1, {1}});
  EXPECT_NE(r.ballot.text.find("PARTY Blue List\n"), std::string::npos);
  EXPECT_NE(r.ballot.text.find("AGAINST Dirk\nFOR Els\nAGAINST Frans\n"), std::string::npos);
  EXPECT_NE(r.ballot.text.find(r.ballot.payload + "\n"), std::string::npos);
  const std::string note = render_note_sheet(r.note);
  EXPECT_NE(note.find("AGAINST Dirk\nFOR Els\nAGAINST Frans\n"), std::string::npos);
  EXPECT_NE(note.find("DIGEST " + to_hex(payload_digest(r.ballot.payload))), std::string::npos);
  EXPECT_EQ(r.ballot.text.find("BPV1|"), r.ballot.text.rfind("BPV1|"));
}

CastResult seeded_cast() {
  const ElectionConfig config = test::small_config();
  const BlindKeyPair& key = test::key_512();
  Rng rng(2024);
  CredentialIssuer issuer;
  const VoterCredential cred = issuer.issue("fixture-voter", rng);
  Registry registry;
  registry.add(cred);
  Authority authority(config, key, registry);
  return prepare_and_cast(config, key.public_key(), cred, {0, {0, 2}}, direct_channel(authority), rng);
}

TEST(Render, DeterministicUnderSeed) {
  const CastResult a = seeded_cast();
  const CastResult b = seeded_cast();
  EXPECT_EQ(a.ballot.text, b.ballot.text);
  EXPECT_EQ(a.note, b.note);
}

TEST(Render, MatchesGoldenFixture) {
  const CastResult r = seeded_cast();
  const std::string rendered = r.ballot.text + "\n" + render_note_sheet(r.note);
  const std::string path = std::string(BPV_GOLDEN_DIR) + "/ballot_fixture.txt";
  if (std::getenv("BPV_UPDATE_GOLDEN")) test::write_text(path, rendered);
  EXPECT_EQ(rendered, test::read_text(path));
}

TEST(CastResultShape, OnlyBallotAndNoteSheet) {
  Booth b;
  auto [ballot, note] = b.cast(0, {0, {}});
  static_assert(std::is_same_v<decltype(ballot), BallotArtifact>);
  static_assert(std::is_same_v<decltype(note), NoteSheet>);
  EXPECT_FALSE(ballot.payload.empty());
}

TEST(EndToEnd, ExhaustiveSmallConfig) {
  Booth b(16);
  int voter = 0;
  for (std::size_t p = 0; p < 2; ++p) {
    for (unsigned mask = 0; mask < 8; ++mask) {
      VoteSelection sel{p, {}};
      for (std::size_t c = 0; c < 3; ++c)
        if (mask & (1u << c)) sel.approvals.insert(c);
      const CastResult r = b.cast(voter++, sel);
      ASSERT_EQ(verify_ballot(b.pk, b.config, r.ballot.payload), sel);
      ASSERT_EQ(r.note.stances.size(), 3u);
      for (std::size_t c = 0; c < 3; ++c)
        EXPECT_EQ(r.note.stances[c].second == Stance::For, sel.approvals.count(c) == 1);
    }
  }
}

// The authority's view of each exchange is (B_i, B_i^d). For every such
// trace and every published ballot there is a blinding factor that explains
// the pairing, so the view carries no information about which is whose.
TEST(Secrecy, EveryTraceIsConsistentWithEveryBallot) {
  Booth b(12);
  std::vector<BigInt> blinded;
  std::vector<Signature> sigs;
  std::vector<BigInt> messages;
  for (int i = 0; i < 12; ++i) {
    const CastResult r = b.cast(i, legacy::random_selection(b.config, b.rng));
    sigs.push_back(parse_payload(b.pk, r.ballot.payload));
    messages.push_back(verify_recover(b.pk, sigs.back()));
  }
  for (const auto& req : b.authority.export_request_log()) blinded.push_back(bytes_to_int(req.blinded));

  for (std::size_t i = 0; i < blinded.size(); ++i) {
    const BigInt blind_sig = powm(blinded[i], b.key.d, b.pk.n);
    for (std::size_t j = 0; j < messages.size(); ++j) {
      const BigInt m_inv = mod_inverse(messages[j], b.pk.n);
      ASSERT_NE(m_inv, 0);
      const BigInt r_prime = powm((blinded[i] * m_inv) % b.pk.n, b.key.d, b.pk.n);
      const BlindingFactor f(b.pk, r_prime);
      ASSERT_EQ(blind(b.pk, messages[j], f).value, blinded[i]);
      ASSERT_EQ(unblind(b.pk, blind_sig, f), sigs[j]);
    }
  }
}

}  // namespace
}  // namespace bpv
