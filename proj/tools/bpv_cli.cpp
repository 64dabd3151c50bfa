// bpv: command-line entry points for every protocol role.
//
// All state lives in plain files inside an election directory:
//   election.cfg     election configuration
//   public.key       authority public key (N=..., e=...)
//   private.key      authority private key (N, e, d)
//   registry.txt     VOTER <id> <ed25519 public key hex>
//   credentials.txt  CRED <id> <ed25519 seed hex>   (stand-in for voters' eIDs)
//   requests.log     REQ lines the authority accepted, in arrival order
//   ballot_box.txt   one mailed BPV1| payload per line
//   board.txt        hash-chained bulletin board
//   ballots/         printed ballot and note sheet per voter
//   pending/         voter state between a mailbox request and its answer

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bpv/bpv.hpp"

namespace fs = std::filesystem;
using namespace bpv;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitBlock = 2;
constexpr int kExitCheat = 4;
constexpr int kExitUsage = 64;

constexpr const char* kGrammar = R"(usage: bpv [--seed N] <command> [options]
  setup      --dir D --config FILE (--voters N | --voter-ids FILE) [--bits B] [--force]
  vote       --dir D --voter ID --party P [--approve C,...] [--no-mail]
  vote       --dir D --voter ID --party P [--approve C,...] --request-out FILE
  vote       --dir D --voter ID --collect FILE [--no-mail]
  authority  --dir D --in FILE --out FILE
  verify     --dir D PAYLOAD
  tally      --dir D [--threads N] [--no-publish]
  audit      --dir D
  gate       --dir D [--fail-open] VOTER_ID
  stuff      --dir D --count N
  legacy-sim SCENARIO [--config FILE] [--board FILE]
  board verify FILE
exit: 0 ok, 1 error (ERR <Code> <detail> on stderr), 2 gate BLOCK, 4 audit cheat flag, 64 usage
)";

struct ElectionDir {
  fs::path root;

  std::string file(const char* name) const { return (root / name).string(); }
  std::string config() const { return file("election.cfg"); }
  std::string public_key() const { return file("public.key"); }
  std::string private_key() const { return file("private.key"); }
  std::string registry() const { return file("registry.txt"); }
  std::string credentials() const { return file("credentials.txt"); }
  std::string requests() const { return file("requests.log"); }
  std::string ballot_box() const { return file("ballot_box.txt"); }
  std::string board() const { return file("board.txt"); }
  fs::path ballots() const { return root / "ballots"; }
  fs::path pending(const std::string& voter) const { return root / "pending" / (voter + ".txt"); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!(out << text)) throw Error(Errc::IoFailure, "cannot write " + path);
}

void append_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!(out << text)) throw Error(Errc::IoFailure, "cannot append to " + path);
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

std::vector<SigningRequest> load_request_log(const ElectionDir& dir) {
  std::vector<SigningRequest> log;
  if (!fs::exists(dir.requests())) return log;
  for (const auto& line : data_lines(read_file(dir.requests()))) log.push_back(parse_request(line));
  return log;
}

std::map<std::string, VoterCredential> load_credentials(const ElectionDir& dir) {
  std::map<std::string, VoterCredential> out;
  for (const auto& line : data_lines(read_file(dir.credentials()))) {
    std::istringstream ls(line);
    std::string tag, id, seed, extra;
    if (!(ls >> tag >> id >> seed) || tag != "CRED" || (ls >> extra))
      throw Error(Errc::ParseError, "credentials line: " + line);
    out.emplace(id, VoterCredential(id, fixed_from_hex<32>(seed)));
  }
  return out;
}

BallotBox load_box(const ElectionDir& dir) {
  if (!fs::exists(dir.ballot_box())) return {};
  std::ifstream in(dir.ballot_box(), std::ios::binary);
  return parse_ballot_box(in);
}

/// The authority as reconstructed from its files: key, registry and the
/// persisted request log. New requests are persisted through `commit`.
class PersistentAuthority {
 public:
  explicit PersistentAuthority(const ElectionDir& dir, AuthorityOptions options = {})
      : dir_(dir),
        authority_(load_config(dir.config()), load_private_key(dir.private_key()), load_registry(dir.registry()),
                   options) {
    authority_.restore_log(load_request_log(dir));
    persisted_ = authority_.log_size();
  }

  Authority& get() { return authority_; }

  void commit() {
    Board board(dir_.board());
    const auto log = authority_.export_request_log(board);
    std::string lines;
    for (std::size_t i = persisted_; i < log.size(); ++i) lines += format_request(log[i]) + "\n";
    if (!lines.empty()) append_file(dir_.requests(), lines);
    persisted_ = log.size();
  }

 private:
  ElectionDir dir_;
  Authority authority_;
  std::size_t persisted_ = 0;
};

VoteSelection parse_selection(const ElectionConfig& config, std::size_t party, const std::vector<std::size_t>& approve) {
  VoteSelection sel{party, {approve.begin(), approve.end()}};
  require_valid(config, sel);
  return sel;
}

void print_and_store(const ElectionDir& dir, const std::string& voter, const CastResult& r, bool mail) {
  fs::create_directories(dir.ballots());
  write_file((dir.ballots() / (voter + ".ballot.txt")).string(), r.ballot.text);
  write_file((dir.ballots() / (voter + ".note.txt")).string(), render_note_sheet(r.note));
  if (mail) append_file(dir.ballot_box(), r.ballot.payload + "\n");
  std::cout << r.ballot.text << "\n" << render_note_sheet(r.note);
  std::cout << (mail ? "MAILED" : "NOT MAILED") << "\n";
}

std::string format_pending(const PendingCast& p, std::size_t index) {
  std::string out = "INDEX " + std::to_string(index) + "\n";
  out += "PARTY " + std::to_string(p.selection.party_index) + "\n";
  out += "APPROVE";
  for (std::size_t c : p.selection.approvals) out += " " + std::to_string(c);
  out += "\n";
  out += "NONCE " + to_hex(p.nonce) + "\n";
  out += "PADDED " + to_hex(p.padded) + "\n";
  out += "R " + to_hex(p.blinding_factor) + "\n";
  out += format_request(p.request) + "\n";
  return out;
}

std::pair<PendingCast, std::size_t> parse_pending(const std::string& text) {
  PendingCast p;
  std::size_t index = 0;
  for (const auto& line : data_lines(text)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "INDEX") ls >> index;
    else if (key == "PARTY") ls >> p.selection.party_index;
    else if (key == "APPROVE") {
      for (std::size_t c; ls >> c;) p.selection.approvals.insert(c);
    } else if (key == "NONCE") {
      std::string hex;
      ls >> hex;
      p.nonce = fixed_from_hex<kNonceBytes>(hex);
    } else if (key == "PADDED" || key == "R") {
      std::string hex;
      ls >> hex;
      (key == "R" ? p.blinding_factor : p.padded) = bigint_from_hex(hex);
    } else if (key == "REQ") {
      p.request = parse_request(line);
    } else {
      throw Error(Errc::ParseError, "pending line: " + line);
    }
  }
  return {p, index};
}

// ---------------------------------------------------------------------------
// Commands

struct Options {
  std::optional<std::uint64_t> seed;
  std::string dir = ".";
  // setup
  std::string config;
  std::size_t voters = 0;
  std::string voter_ids;
  std::size_t bits = 2048;
  bool force = false;
  // vote
  std::string voter;
  std::optional<std::size_t> party;
  std::vector<std::size_t> approve;
  bool no_mail = false;
  std::string request_out;
  std::string collect;
  // authority
  std::string in, out;
  // verify / gate / legacy / board
  std::string payload;
  std::string voter_id;
  bool fail_open = false;
  unsigned threads = 1;
  bool no_publish = false;
  std::size_t count = 0;
  std::string scenario;
  std::string board_out;
  std::string board_file;
};

Rng make_rng(const Options& o, const std::string& label) {
  Rng base = o.seed ? Rng(*o.seed) : Rng::from_os();
  return base.split(label);
}

int cmd_setup(const Options& o) {
  const ElectionDir dir{o.dir};
  fs::create_directories(dir.root);
  if (fs::exists(dir.config()) && !o.force)
    throw Error(Errc::Usage, dir.config() + " exists (use --force to overwrite)");
  const ElectionConfig config = load_config(o.config);

  std::vector<std::string> ids;
  if (!o.voter_ids.empty()) {
    ids = data_lines(read_file(o.voter_ids));
  } else {
    for (std::size_t i = 0; i < o.voters; ++i) ids.push_back("voter" + std::to_string(i));
  }
  if (ids.empty()) throw Error(Errc::Usage, "no voters given");

  Rng key_rng = make_rng(o, "keygen");
  const BlindKeyPair key = keygen(o.bits, key_rng);
  Rng cred_rng = make_rng(o, "credentials");
  CredentialIssuer issuer;
  Registry registry;
  std::string creds;
  for (const auto& id : ids) {
    const VoterCredential cred = issuer.issue(id, cred_rng);
    registry.add(cred);
    creds += "CRED " + id + " " + to_hex(cred.seed()) + "\n";
  }

  for (const std::string& stale : {dir.requests(), dir.ballot_box(), dir.board()}) fs::remove(stale);
  fs::remove_all(dir.ballots());
  fs::remove_all(dir.root / "pending");
  save_config(config, dir.config());
  write_file(dir.public_key(), format_public_key(key.public_key()));
  write_file(dir.private_key(), format_private_key(key));
  write_file(dir.registry(), format_registry(registry));
  write_file(dir.credentials(), creds);
  Board(dir.board()).append(RecordKind::Meta, "SETUP " + to_hex(config.id()) + "\n" + format_public_key(key.public_key()));

  std::cout << "ELECTION " << to_hex(config.id()) << "\n"
            << "VOTERS " << ids.size() << "\n"
            << "KEY_BITS " << bit_length(key.n) << "\n";
  return kExitOk;
}

int cmd_vote(const Options& o) {
  const ElectionDir dir{o.dir};
  const ElectionConfig config = load_config(dir.config());
  const PublicKey pk = load_public_key(dir.public_key());
  const auto creds = load_credentials(dir);
  const auto cred = creds.find(o.voter);
  if (cred == creds.end()) throw Error(Errc::UnknownVoter, o.voter);

  if (!o.collect.empty()) {
    const auto [pending, index] = parse_pending(read_file(dir.pending(o.voter).string()));
    const auto responses = data_lines(read_file(o.collect));
    if (index >= responses.size()) throw Error(Errc::ParseError, "no response at mailbox position " + std::to_string(index));
    const MailboxResponse rsp = parse_response(responses[index]);
    if (rsp.error) throw Error(*rsp.error, "authority refused the request");
    const CastResult r = finish_cast(config, pk, pending, *rsp.blinded_signature);
    fs::remove(dir.pending(o.voter));
    print_and_store(dir, o.voter, r, !o.no_mail);
    return kExitOk;
  }

  if (!o.party) throw Error(Errc::Usage, "--party is required");
  const VoteSelection sel = parse_selection(config, *o.party, o.approve);
  Rng rng = make_rng(o, "vote:" + o.voter);

  if (!o.request_out.empty()) {
    const PendingCast pending = begin_cast(config, pk, cred->second, sel, rng);
    const std::size_t index = fs::exists(o.request_out) ? data_lines(read_file(o.request_out)).size() : 0;
    fs::create_directories(dir.pending(o.voter).parent_path());
    write_file(dir.pending(o.voter).string(), format_pending(pending, index));
    append_file(o.request_out, format_request(pending.request) + "\n");
    std::cout << "REQUEST " << o.voter << " " << index << "\n";
    return kExitOk;
  }

  PersistentAuthority authority(dir);
  const AuthorityChannel channel = [&](const SigningRequest& req) {
    Bytes answer = authority.get().handle_request(req);
    authority.commit();
    return answer;
  };
  const CastResult r = prepare_and_cast(config, pk, cred->second, sel, channel, rng);
  print_and_store(dir, o.voter, r, !o.no_mail);
  return kExitOk;
}

int cmd_authority(const Options& o) {
  const ElectionDir dir{o.dir};
  PersistentAuthority authority(dir);
  std::ifstream in(o.in, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + o.in);
  const std::string responses = process_mailbox(authority.get(), in);
  authority.commit();
  write_file(o.out, responses);
  std::size_t ok = 0, refused = 0;
  for (const auto& line : data_lines(responses)) (line.rfind("RSP OK", 0) == 0 ? ok : refused) += 1;
  std::cout << "SIGNED " << ok << "\nREFUSED " << refused << "\n";
  return kExitOk;
}

int cmd_verify(const Options& o) {
  const ElectionDir dir{o.dir};
  const ElectionConfig config = load_config(dir.config());
  const PublicKey pk = load_public_key(dir.public_key());
  const VoteSelection sel = verify_ballot(pk, config, o.payload);
  std::cout << "VALID\n";
  std::cout << "PARTY " << config.party(sel.party_index).name << "\n";
  for (const auto& [name, stance] : stances_of(config, sel)) std::cout << to_string(stance) << " " << name << "\n";
  const PayloadDigest digest = payload_digest(o.payload);
  std::cout << "DIGEST " << to_hex(digest) << "\n";
  if (fs::exists(dir.board())) {
    const auto seq = find_ballot_digest(Board(dir.board()), digest);
    std::cout << "BOARD " << (seq ? "seq=" + std::to_string(*seq) : std::string("absent")) << "\n";
  }
  return kExitOk;
}

struct Counted {
  ElectionConfig config;
  TallyResult tally;
  AuditReport audit;
};

Counted count(const ElectionDir& dir, unsigned threads) {
  Counted c{load_config(dir.config()), {}, {}};
  const PublicKey pk = load_public_key(dir.public_key());
  c.tally = tally(pk, c.config, load_box(dir), {.threads = threads});
  c.audit = eligibility_audit(load_registry(dir.registry()), load_request_log(dir), c.tally, c.config.id());
  return c;
}

int cmd_tally(const Options& o) {
  const ElectionDir dir{o.dir};
  const Counted c = count(dir, o.threads);
  std::cout << format_tally_report(c.config, c.tally);
  if (!o.no_publish) {
    Board board(dir.board());
    const auto records = publish_tally(board, c.config, c.tally, c.audit);
    std::cout << "PUBLISHED " << records.size() << " records\n";
  }
  return kExitOk;
}

int cmd_audit(const Options& o) {
  const Counted c = count(ElectionDir{o.dir}, o.threads);
  std::cout << format_audit_report(c.audit);
  return c.audit.cheat_flag ? kExitCheat : kExitOk;
}

int cmd_gate(const Options& o) {
  const ElectionDir dir{o.dir};
  const Registry registry = load_registry(dir.registry());
  std::optional<std::vector<SigningRequest>> log;
  try {
    log = load_request_log(dir);
  } catch (const Error&) {
    log.reset();
  }
  const GateDecision d = polling_gate(registry, log ? &*log : nullptr, o.voter_id, {.fail_open = o.fail_open});
  std::cout << to_string(d.verdict) << " " << o.voter_id;
  if (d.annotation) std::cout << " " << to_string(*d.annotation);
  std::cout << "\n";
  return d.verdict == GateVerdict::Allow ? kExitOk : kExitBlock;
}

int cmd_stuff(const Options& o) {
  const ElectionDir dir{o.dir};
  const ElectionConfig config = load_config(dir.config());
  PersistentAuthority authority(dir, {.adversarial = true});
  Rng rng = make_rng(o, "stuff");
  std::string lines;
  for (std::size_t i = 0; i < o.count; ++i)
    lines += forge_ballot(authority.get(), config, legacy::random_selection(config, rng), rng) + "\n";
  append_file(dir.ballot_box(), lines);
  std::cout << "STUFFED " << o.count << "\n";
  return kExitOk;
}

ElectionConfig demo_config() {
  return ElectionConfig::make({0x4c, 0x45, 0x47, 0x41, 0x43, 0x59, 0x00, 0x01}, "Legacy scenario",
                              {{"Party A", {"A1", "A2", "A3"}}, {"Party B", {"B1", "B2", "B3"}}});
}

int cmd_legacy(const Options& o) {
  std::ifstream in(o.scenario);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + o.scenario);
  const legacy::Scenario s = legacy::parse_scenario(in);
  const ElectionConfig config = o.config.empty() ? demo_config() : load_config(o.config);
  std::optional<Board> board;
  if (!o.board_out.empty()) board.emplace(o.board_out);
  const auto report = legacy::attack_k_reuse(config, s, board ? &*board : nullptr);
  std::cout << legacy::format_scenario_report(report);
  return kExitOk;
}

int cmd_board_verify(const Options& o) {
  if (!fs::exists(o.board_file)) throw Error(Errc::IoFailure, "cannot open " + o.board_file);
  const BoardVerdict v = board_verify(o.board_file);
  if (!v.ok())
    throw Error(Errc::ChainBroken, "seq=" + std::to_string(*v.broken_seq) + " verified=" + std::to_string(v.records));
  std::cout << "OK records=" << v.records << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Blind-signature postal voting: every protocol role on the command line", "bpv"};
  app.require_subcommand(1);
  app.add_option("--seed", o.seed, "Seed for all randomness (default: operating system)");

  auto with_dir = [&](CLI::App* sub) { sub->add_option("--dir", o.dir, "Election directory")->capture_default_str(); };

  auto* setup = app.add_subcommand("setup", "Generate the authority key, voter credentials and registry");
  with_dir(setup);
  setup->add_option("--config", o.config, "Election configuration file")->required();
  auto* voters_opt = setup->add_option("--voters", o.voters, "Number of voters (ids voter0..voterN-1)");
  auto* ids_opt = setup->add_option("--voter-ids", o.voter_ids, "File with one voter id per line");
  voters_opt->excludes(ids_opt);
  setup->add_option("--bits", o.bits, "Authority modulus size")->capture_default_str();
  setup->add_flag("--force", o.force, "Overwrite an existing election directory");

  auto* vote = app.add_subcommand("vote", "Run the voter device for one scripted selection");
  with_dir(vote);
  vote->add_option("--voter", o.voter, "Voter id")->required();
  vote->add_option("--party", o.party, "Party index");
  vote->add_option("--approve", o.approve, "Approved candidate indices")->delimiter(',');
  vote->add_flag("--no-mail", o.no_mail, "Print the ballot but do not put it in the ballot box");
  auto* req_out = vote->add_option("--request-out", o.request_out, "Append the signing request to a mailbox file");
  auto* collect = vote->add_option("--collect", o.collect, "Finish a mailbox vote from an authority response file");
  req_out->excludes(collect);

  auto* authority = app.add_subcommand("authority", "Process a request mailbox file");
  with_dir(authority);
  authority->add_option("--in", o.in, "Request mailbox")->required();
  authority->add_option("--out", o.out, "Response file")->required();

  auto* verify = app.add_subcommand("verify", "Verification app: decode a printed payload");
  with_dir(verify);
  verify->add_option("payload", o.payload, "BPV1| payload line")->required();

  auto* tally_cmd = app.add_subcommand("tally", "Verify and count the ballot box, publish to the board");
  with_dir(tally_cmd);
  tally_cmd->add_option("--threads", o.threads, "Verification workers (0 = all cores)")->capture_default_str();
  tally_cmd->add_flag("--no-publish", o.no_publish, "Do not append to the board");

  auto* audit = app.add_subcommand("audit", "Compare accepted ballots with valid requests");
  with_dir(audit);

  auto* gate = app.add_subcommand("gate", "Polling-station check for a voter");
  with_dir(gate);
  gate->add_option("voter_id", o.voter_id, "Voter id")->required();
  gate->add_flag("--fail-open", o.fail_open, "ALLOW when the request log is unavailable");

  auto* stuff = app.add_subcommand("stuff", "Adversarial authority: sign ballots without requests");
  with_dir(stuff);
  stuff->add_option("--count", o.count, "Forged ballots to add")->required();

  auto* legacy_sim = app.add_subcommand("legacy-sim", "Run a token-k reuse scenario against the legacy system");
  legacy_sim->add_option("scenario", o.scenario, "Scenario file")->required();
  legacy_sim->add_option("--config", o.config, "Election configuration (default: built-in 2x3)");
  legacy_sim->add_option("--board", o.board_out, "Publish codes to this board file");

  auto* board = app.add_subcommand("board", "Bulletin board tools");
  board->require_subcommand(1);
  auto* board_verify_cmd = board->add_subcommand("verify", "Recompute the hash chain");
  board_verify_cmd->add_option("file", o.board_file, "Board file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help() << "\n" << kGrammar;
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "ERR Usage " << e.what() << "\n" << kGrammar;
    return kExitUsage;
  }

  try {
    if (*setup) {
      if (o.voters == 0 && o.voter_ids.empty()) throw Error(Errc::Usage, "one of --voters or --voter-ids is required");
      return cmd_setup(o);
    }
    if (*vote) return cmd_vote(o);
    if (*authority) return cmd_authority(o);
    if (*verify) return cmd_verify(o);
    if (*tally_cmd) return cmd_tally(o);
    if (*audit) return cmd_audit(o);
    if (*gate) return cmd_gate(o);
    if (*stuff) return cmd_stuff(o);
    if (*legacy_sim) return cmd_legacy(o);
    if (*board_verify_cmd) return cmd_board_verify(o);
  } catch (const LocalVerifyError& e) {
    std::cerr << "ERR " << to_string(e.code()) << " " << e.detail() << "\n"
              << "EVIDENCE " << format_request(e.request()) << "\n"
              << "EVIDENCE RSP " << to_hex(e.response()) << "\n";
    return kExitError;
  } catch (const Error& e) {
    std::cerr << "ERR " << to_string(e.code()) << " " << e.detail() << "\n";
    if (e.code() == Errc::Usage) {
      std::cerr << kGrammar;
      return kExitUsage;
    }
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "ERR IoFailure " << e.what() << "\n";
    return kExitError;
  }
  std::cerr << kGrammar;
  return kExitUsage;
}
