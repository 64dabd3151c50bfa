#include <gtest/gtest.h>

#include "support/test_support.hpp"

namespace bpv {
namespace {

Errc error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Usage;  // sentinel: no error
}

TEST(Encode, PartyOnlyBallotLayout) {
  const EncodedBallot b = encode({3, {}}, Nonce{});
  std::array<std::uint8_t, 32> expected{};
  expected[0] = 0x01;
  expected[9] = 0x03;
  EXPECT_EQ(b.bytes, expected);
}

TEST(Encode, BitmaskIsLsbFirst) {
  const EncodedBallot b = encode({0, {0, 2, 4}}, Nonce{});
  EXPECT_EQ(b.bytes[10], 0x15);  // 0b00010101
  for (std::size_t i = 11; i <= 28; ++i) EXPECT_EQ(b.bytes[i], 0) << i;
}

TEST(Encode, HighCandidatesLandInLaterBytes) {
  const EncodedBallot b = encode({0, {8, 151}}, Nonce{});
  EXPECT_EQ(b.bytes[11], 0x01);
  EXPECT_EQ(b.bytes[28], 0x80);
}

TEST(Encode, NonceOccupiesBytesOneToEight) {
  const Nonce n{1, 2, 3, 4, 5, 6, 7, 8};
  const EncodedBallot b = encode({0, {}}, n);
  EXPECT_TRUE(std::equal(n.begin(), n.end(), b.bytes.begin() + 1));
}

TEST(Decode, InvertsEncode) {
  const auto cfg = test::small_config();
  const VoteSelection sel{1, {0, 2}};
  const Nonce n{9, 8, 7, 6, 5, 4, 3, 2};
  const DecodedBallot d = decode(encode(sel, n), cfg);
  EXPECT_EQ(d.selection, sel);
  EXPECT_EQ(d.nonce, n);
}

TEST(Decode, RejectsBadVersion) {
  EncodedBallot b = encode({0, {}}, Nonce{});
  b.bytes[0] = 0x02;
  EXPECT_EQ(error_of([&] { decode(b, test::small_config()); }), Errc::BadVersion);
}

TEST(Decode, RejectsReservedBytes) {
  for (std::size_t i = 29; i < 32; ++i) {
    EncodedBallot b = encode({0, {}}, Nonce{});
    b.bytes[i] = 0x01;
    EXPECT_EQ(error_of([&] { decode(b, test::small_config()); }), Errc::ReservedNonZero);
  }
}

TEST(Decode, RejectsPartyOutOfRange) {
  const EncodedBallot b = encode({2, {}}, Nonce{});
  EXPECT_EQ(error_of([&] { decode(b, test::small_config()); }), Errc::PartyOutOfRange);
}

TEST(Decode, RejectsStrayApprovalBits) {
  // Every bit above the 3-candidate party's range must be refused.
  for (std::size_t bit = 3; bit < 152; ++bit) {
    EncodedBallot b = encode({0, {1}}, Nonce{});
    b.bytes[10 + bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
    EXPECT_EQ(error_of([&] { decode(b, test::small_config()); }), Errc::StrayApprovalBit) << bit;
  }
}

TEST(Pad, MinimumModulusHasOneFillerByte) {
  const Bytes p = pad(encode({0, {}}, Nonce{}), test::test_election_id(), 44);
  ASSERT_EQ(p.size(), 44u);
  EXPECT_EQ(p[10], 0xFF);
  EXPECT_EQ(p[11], 0x00);
  EXPECT_EQ(error_of([] { pad(EncodedBallot{}, ElectionId{}, 43); }), Errc::ModulusTooSmall);
}

TEST(Pad, ProductionModulusLayout) {
  const auto id = test::test_election_id();
  const EncodedBallot b = encode({1, {2}}, Nonce{1, 1, 1, 1, 1, 1, 1, 1});
  const Bytes p = pad(b, id, 256);
  ASSERT_EQ(p.size(), 256u);
  EXPECT_EQ(p[0], 0x00);
  EXPECT_EQ(p[1], 0x56);
  EXPECT_TRUE(std::equal(id.begin(), id.end(), p.begin() + 2));
  EXPECT_EQ(std::count(p.begin() + 10, p.begin() + 10 + 213, 0xFF), 213);  // 256 - 43
  EXPECT_EQ(p[223], 0x00);
  EXPECT_TRUE(std::equal(b.bytes.begin(), b.bytes.end(), p.begin() + 224));
}

TEST(Unpad, InvertsPad) {
  const auto id = test::test_election_id();
  const EncodedBallot b = encode({0, {0, 1}}, Nonce{5});
  EXPECT_EQ(unpad(pad(b, id, 128), id), b);
}

TEST(Unpad, RejectsZeroInFiller) {
  const auto id = test::test_election_id();
  Bytes p = pad(EncodedBallot{}, id, 64);
  p[15] = 0x00;
  EXPECT_EQ(error_of([&] { unpad(p, id); }), Errc::BadStructure);
}

TEST(Unpad, RejectsWrongElection) {
  Bytes p = pad(EncodedBallot{}, test::test_election_id(), 64);
  EXPECT_EQ(error_of([&] { unpad(p, ElectionId{}); }), Errc::WrongElection);
}

TEST(Unpad, RejectsStructuralDamage) {
  const auto id = test::test_election_id();
  const Bytes good = pad(EncodedBallot{}, id, 64);
  for (std::size_t pos : {0u, 1u, 10u, 30u}) {
    Bytes p = good;
    p[pos] ^= 0x01;
    EXPECT_EQ(error_of([&] { unpad(p, id); }), Errc::BadStructure) << pos;
  }
  Bytes sep_moved = good;
  sep_moved[64 - 33] = 0xFF;  // separator overwritten
  EXPECT_EQ(error_of([&] { unpad(sep_moved, id); }), Errc::BadStructure);
  EXPECT_EQ(error_of([&] { unpad(ByteView(good).first(43), id); }), Errc::BadStructure);
}

TEST(IntBytes, BigEndianExamples) {
  EXPECT_EQ(bytes_to_int(Bytes{0x00, 0x01}), 1);
  EXPECT_EQ(bytes_to_int(Bytes{0x01, 0x00}), 256);
  EXPECT_EQ(bytes_to_int(Bytes{}), 0);
  EXPECT_EQ(int_to_bytes(1, 3), (Bytes{0, 0, 1}));
  EXPECT_EQ(int_to_bytes(0, 2), (Bytes{0, 0}));
}

TEST(IntBytes, OverflowAtWidthBound) {
  for (std::size_t k : {1u, 2u, 8u, 33u}) {
    const BigInt limit = BigInt(1) << (8 * k);
    EXPECT_NO_THROW(int_to_bytes(limit - 1, k));
    EXPECT_EQ(error_of([&] { int_to_bytes(limit, k); }), Errc::Overflow) << k;
  }
}

TEST(IntBytes, RandomBijection) {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const Bytes x = rng.bytes(rng.uniform(70));
    EXPECT_EQ(int_to_bytes(bytes_to_int(x), x.size()), x);
  }
}

VoteSelection random_valid(const ElectionConfig& cfg, Rng& rng) { return legacy::random_selection(cfg, rng); }

TEST(CodecProperty, RandomRoundTrips) {
  const auto cfg = test::wide_config();
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const VoteSelection sel = random_valid(cfg, rng);
    const Nonce n = rng.bytes<8>();
    const EncodedBallot b = encode(sel, n);
    ASSERT_EQ(decode(b, cfg), (DecodedBallot{sel, n}));
    const std::size_t k = 44 + rng.uniform(300);
    const Bytes p = pad(b, cfg.id(), k);
    ASSERT_EQ(p.size(), k);
    ASSERT_EQ(unpad(p, cfg.id()), b);
    // Leading zero byte: below any modulus whose top byte is non-zero.
    ASSERT_LT(bytes_to_int(p), BigInt(1) << (8 * (k - 1)));
  }
}

TEST(CodecProperty, ExhaustiveSmallConfig) {
  const auto cfg = test::small_config();
  const Nonce n{0xAA, 0, 0, 0, 0, 0, 0, 0x55};
  std::set<std::array<std::uint8_t, 32>> blocks;
  for (std::size_t p = 0; p < 2; ++p) {
    for (unsigned mask = 0; mask < 8; ++mask) {
      VoteSelection sel{p, {}};
      for (std::size_t c = 0; c < 3; ++c)
        if (mask & (1u << c)) sel.approvals.insert(c);
      const EncodedBallot b = encode(sel, n);
      blocks.insert(b.bytes);
      EXPECT_EQ(decode(b, cfg).selection, sel);
      EXPECT_EQ(unpad(pad(b, cfg.id(), 64), cfg.id()), b);
    }
  }
  EXPECT_EQ(blocks.size(), 16u);
}

TEST(CodecProperty, PaddedMessageBelowRealModulus) {
  const auto& key = test::key_512();
  const auto cfg = test::small_config();
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const Bytes p = pad(encode(random_valid(cfg, rng), rng.bytes<8>()), cfg.id(), key.modulus_bytes());
    ASSERT_LT(bytes_to_int(p), key.n);
  }
}

TEST(CodecProperty, DistinctNoncesGiveDistinctBlocks) {
  Rng rng(17);
  const VoteSelection sel{0, {1}};
  for (int i = 0; i < 1000; ++i) {
    const Nonce a = rng.bytes<8>();
    Nonce b = rng.bytes<8>();
    if (a == b) b[0] ^= 1;
    EXPECT_NE(encode(sel, a), encode(sel, b));
  }
}

}  // namespace
}  // namespace bpv
