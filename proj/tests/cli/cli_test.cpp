#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <map>

#include "support/test_support.hpp"

namespace bpv {
namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome bpv(const std::string& args) {
  const std::string cmd = std::string(BPV_CLI_PATH) + " " + args + " 2>&1";
  Outcome r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

const char* kConfig =
    "ELECTION 2024101300000042 Town council\n"
    "PARTY Green List\nCAND Ann\nCAND Bert\nCAND Cleo\n"
    "PARTY Blue List\nCAND Dirk\nCAND Els\n";

struct Script {
  std::string voter;
  std::size_t party;
  std::string approve;  // comma-separated indices, may be empty
};

const std::vector<Script> kScript{
    {"voter0", 0, "0,2"}, {"voter1", 1, "1"}, {"voter2", 0, ""}, {"voter3", 0, "1"}, {"voter4", 1, "0,1"},
};

class CliElection : public ::testing::Test {
 protected:
  test::TempDir tmp;
  std::string dir = tmp.file("el");

  void SetUp() override {
    test::write_text(tmp.file("e.cfg"), kConfig);
    const Outcome r = bpv("--seed 7 setup --dir " + dir + " --config " + tmp.file("e.cfg") + " --voters 6 --bits 512");
    ASSERT_EQ(r.code, 0) << r.out;
  }

  Outcome vote(const Script& s, const std::string& extra = "") {
    std::string args = "--seed 7 vote --dir " + dir + " --voter " + s.voter + " --party " + std::to_string(s.party);
    if (!s.approve.empty()) args += " --approve " + s.approve;
    return bpv(args + extra);
  }
};

TEST_F(CliElection, HonestScriptedElection) {
  for (const auto& s : kScript) ASSERT_EQ(vote(s).code, 0);
  const Outcome t = bpv("tally --dir " + dir);
  ASSERT_EQ(t.code, 0) << t.out;
  EXPECT_NE(t.out.find("accepted 5\n"), std::string::npos) << t.out;
  EXPECT_NE(t.out.find("party 0 3 Green List\n  cand 0 1 Ann\n  cand 1 1 Bert\n  cand 2 1 Cleo\n"), std::string::npos)
      << t.out;
  EXPECT_NE(t.out.find("party 1 2 Blue List\n  cand 0 1 Dirk\n  cand 1 2 Els\n"), std::string::npos) << t.out;

  const Outcome a = bpv("audit --dir " + dir);
  EXPECT_EQ(a.code, 0) << a.out;
  EXPECT_NE(a.out.find("requests_valid 5\nballots_valid 5\ndiscrepancy 0\ncheat_flag false\n"), std::string::npos)
      << a.out;

  const Outcome b = bpv("board verify " + dir + "/board.txt");
  EXPECT_EQ(b.code, 0) << b.out;
  EXPECT_EQ(b.out, "OK records=13\n");  // META + 5 REQUEST + 5 BALLOT_DIGEST + TALLY + AUDIT
}

TEST_F(CliElection, VerifyPrintsVoteAndBoardPosition) {
  vote(kScript[0]);
  bpv("tally --dir " + dir);
  const std::string payload = test::read_text(dir + "/ballot_box.txt");
  const Outcome v = bpv("verify --dir " + dir + " " + quote(payload.substr(0, payload.size() - 1)));
  ASSERT_EQ(v.code, 0) << v.out;
  EXPECT_NE(v.out.find("VALID\nPARTY Green List\nFOR Ann\nAGAINST Bert\nFOR Cleo\n"), std::string::npos) << v.out;
  EXPECT_NE(v.out.find("BOARD seq=2\n"), std::string::npos) << v.out;
  const std::string note = test::read_text(dir + "/ballots/voter0.note.txt");
  const auto digest_at = note.find("DIGEST ");
  EXPECT_NE(v.out.find(note.substr(digest_at)), std::string::npos);

  const Outcome bad = bpv("verify --dir " + dir + " " + quote("BPV1|AAAA"));
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(bad.out.rfind("ERR BadFraming", 0), 0u) << bad.out;
}

TEST_F(CliElection, SecondVoteRefused) {
  ASSERT_EQ(vote(kScript[0]).code, 0);
  const Outcome again = vote({"voter0", 1, ""});
  EXPECT_EQ(again.code, 1);
  EXPECT_EQ(again.out.rfind("ERR AlreadyRequested", 0), 0u) << again.out;
  const Outcome stranger = vote({"zed", 0, ""});
  EXPECT_EQ(stranger.out.rfind("ERR UnknownVoter", 0), 0u) << stranger.out;
  const Outcome bad_sel = vote({"voter1", 0, "5"});
  EXPECT_EQ(bad_sel.out.rfind("ERR CandidateOutOfRange", 0), 0u) << bad_sel.out;
}

TEST_F(CliElection, GateExitCodes) {
  vote(kScript[1]);
  const Outcome blocked = bpv("gate --dir " + dir + " voter1");
  EXPECT_EQ(blocked.code, 2);
  EXPECT_EQ(blocked.out, "BLOCK voter1\n");
  const Outcome allowed = bpv("gate --dir " + dir + " voter2");
  EXPECT_EQ(allowed.code, 0);
  EXPECT_EQ(allowed.out, "ALLOW voter2\n");
  const Outcome unknown = bpv("gate --dir " + dir + " nobody");
  EXPECT_EQ(unknown.code, 2);
  EXPECT_EQ(unknown.out, "BLOCK nobody UnknownVoter\n");
}

TEST_F(CliElection, MailboxRoundTrip) {
  const std::string mailbox = tmp.file("requests.txt");
  const std::string responses = tmp.file("responses.txt");
  ASSERT_EQ(vote(kScript[0], " --request-out " + mailbox).code, 0);
  ASSERT_EQ(vote(kScript[1], " --request-out " + mailbox).code, 0);
  const Outcome a = bpv("authority --dir " + dir + " --in " + mailbox + " --out " + responses);
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(a.out, "SIGNED 2\nREFUSED 0\n");
  ASSERT_EQ(bpv("vote --dir " + dir + " --voter voter1 --collect " + responses).code, 0);
  ASSERT_EQ(bpv("vote --dir " + dir + " --voter voter0 --collect " + responses).code, 0);
  const Outcome t = bpv("tally --dir " + dir + " --no-publish");
  EXPECT_NE(t.out.find("accepted 2\n"), std::string::npos) << t.out;
  EXPECT_EQ(bpv("gate --dir " + dir + " voter0").code, 2);

  // Replaying the same mailbox is refused request by request.
  const Outcome replay = bpv("authority --dir " + dir + " --in " + mailbox + " --out " + responses);
  EXPECT_EQ(replay.out, "SIGNED 0\nREFUSED 2\n");
  EXPECT_EQ(test::read_text(responses), "RSP ERR AlreadyRequested\nRSP ERR AlreadyRequested\n");
  EXPECT_EQ(bpv("board verify " + dir + "/board.txt").out, "OK records=3\n");
}

TEST_F(CliElection, StuffedBoxRaisesCheatFlag) {
  for (const auto& s : kScript) vote(s);
  ASSERT_EQ(bpv("--seed 1 stuff --dir " + dir + " --count 2").code, 0);
  const Outcome a = bpv("audit --dir " + dir);
  EXPECT_EQ(a.code, 4) << a.out;
  EXPECT_NE(a.out.find("discrepancy 2\ncheat_flag true\n"), std::string::npos) << a.out;
}

TEST_F(CliElection, LostBallotIsNotCheating) {
  for (const auto& s : kScript) vote(s, s.voter == "voter3" ? " --no-mail" : "");
  const Outcome a = bpv("audit --dir " + dir);
  EXPECT_EQ(a.code, 0) << a.out;
  EXPECT_NE(a.out.find("discrepancy -1\n"), std::string::npos) << a.out;
}

TEST_F(CliElection, TamperedBoardReportsSeq) {
  for (const auto& s : kScript) vote(s);
  const std::string path = dir + "/board.txt";
  std::string text = test::read_text(path);
  std::size_t line_start = 0;
  for (int i = 0; i < 3; ++i) line_start = text.find('\n', line_start) + 1;
  const std::size_t payload_at = text.find('|', text.find('|', line_start) + 1) + 1;
  text[payload_at] = text[payload_at] == 'A' ? 'B' : 'A';
  test::write_text(path, text);
  const Outcome b = bpv("board verify " + path);
  EXPECT_NE(b.code, 0);
  EXPECT_EQ(b.out.rfind("ERR ChainBroken seq=3", 0), 0u) << b.out;
  const Outcome t = bpv("tally --dir " + dir);
  EXPECT_EQ(t.code, 1);
  EXPECT_NE(t.out.find("ERR BoardWriteFailure"), std::string::npos) << t.out;
}

TEST(Cli, SeededRunsProduceIdenticalBoards) {
  test::TempDir tmp;
  test::write_text(tmp.file("e.cfg"), kConfig);
  auto run = [&](const std::string& dir) {
    bpv("--seed 11 setup --dir " + dir + " --config " + tmp.file("e.cfg") + " --voters 5 --bits 512");
    for (const auto& s : kScript) {
      std::string args = "--seed 11 vote --dir " + dir + " --voter " + s.voter + " --party " + std::to_string(s.party);
      if (!s.approve.empty()) args += " --approve " + s.approve;
      bpv(args);
    }
    bpv("tally --dir " + dir);
    return test::read_text(dir + "/board.txt");
  };
  const std::string a = run(tmp.file("a"));
  const std::string b = run(tmp.file("b"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}

TEST(Cli, LegacySimulation) {
  test::TempDir tmp;
  test::write_text(tmp.file("s.txt"), "# attack\nHONEST 95\nCOMPROMISED 5\nSEED 3\n");
  const Outcome r = bpv("legacy-sim " + tmp.file("s.txt") + " --board " + tmp.file("board.txt"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("[counted]\ncounted 95\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("[invalidated]\ninvalidated 5\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("compromised_passed_check 5\n"), std::string::npos) << r.out;
  EXPECT_EQ(bpv("board verify " + tmp.file("board.txt")).out, "OK records=95\n");

  test::write_text(tmp.file("bad.txt"), "HONEST 5\nCOMPROMISED 1\n");
  const Outcome bad = bpv("legacy-sim " + tmp.file("bad.txt"));
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(bad.out.rfind("ERR InvariantViolation", 0), 0u) << bad.out;
}

TEST(Cli, UsageErrorsPrintGrammar) {
  for (const char* args : {"", "frobnicate", "vote --dir x", "board", "setup --dir x --config y --voters 2 --voter-ids z"}) {
    const Outcome r = bpv(args);
    EXPECT_EQ(r.code, 64) << args;
    EXPECT_EQ(r.out.rfind("ERR Usage", 0), 0u) << args << "\n" << r.out;
    EXPECT_NE(r.out.find("usage: bpv [--seed N] <command>"), std::string::npos) << args;
  }
}

TEST(Cli, MissingFilesAreIoFailures) {
  test::TempDir tmp;
  const Outcome r = bpv("tally --dir " + tmp.file("nowhere"));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.out.rfind("ERR IoFailure", 0), 0u) << r.out;
  const Outcome b = bpv("board verify " + tmp.file("nowhere.txt"));
  EXPECT_EQ(b.code, 1);
  EXPECT_EQ(b.out.rfind("ERR IoFailure", 0), 0u) << b.out;
}

}  // namespace
}  // namespace bpv
