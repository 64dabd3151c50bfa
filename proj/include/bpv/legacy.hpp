#pragma once

// Model of the original token-k postal system: a ballot-preparation server
// hands each voter a random 128-bit token k printed on three sheets
// (selection, code, note). The tallier can check k is one it issued, but
// not that it is used only once, so compromised voter devices that print a
// shared valid k force the tallier to invalidate every ballot carrying it.

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bpv/board.hpp"
#include "bpv/bytes.hpp"
#include "bpv/election.hpp"
#include "bpv/error.hpp"
#include "bpv/random.hpp"
#include "bpv/tally.hpp"

namespace bpv::legacy {

using TokenK = std::array<std::uint8_t, 16>;

/// 32 symbols, no 0/O/1/I.
inline constexpr std::string_view kCodeAlphabet = "ABCDEFGHJKLMNPQRSTUVWXYZ23456789";
inline constexpr std::size_t kCodeLength = 4;
static_assert(kCodeAlphabet.size() == 32);

struct CandidateCodes {
  std::string for_code;
  std::string against_code;
  bool operator==(const CandidateCodes&) const = default;
};

struct SelectionSheet {
  TokenK k{};
  std::size_t party_index = 0;
  std::string party;
  std::vector<std::string> candidates;
};

/// FOR/AGAINST short codes for every candidate of every party, all distinct.
struct CodeSheet {
  TokenK k{};
  std::vector<std::vector<CandidateCodes>> codes;  ///< [party][candidate]
  bool operator==(const CodeSheet&) const = default;
};

/// Filled in by the voter, by hand, from the code sheet.
struct NoteSheet {
  TokenK k{};
  std::vector<std::string> codes;
};

struct SheetSet {
  TokenK k{};
  std::vector<SelectionSheet> selection_sheets;
  CodeSheet code_sheet;
  NoteSheet note_sheet;  ///< blank template
};

/// The mailed-in selection sheet of one party.
struct LegacyCast {
  TokenK k{};
  std::size_t party_index = 0;
  std::vector<bool> stances;  ///< one entry per candidate of the party; true = FOR
};

inline LegacyCast make_cast(const ElectionConfig& config, const TokenK& k, const VoteSelection& sel) {
  LegacyCast cast{k, sel.party_index, {}};
  const std::size_t n = config.party(sel.party_index).candidates.size();
  for (std::size_t c = 0; c < n; ++c) cast.stances.push_back(sel.approvals.count(c) != 0);
  return cast;
}

inline VoteSelection selection_of(const LegacyCast& cast) {
  VoteSelection sel{cast.party_index, {}};
  for (std::size_t c = 0; c < cast.stances.size(); ++c)
    if (cast.stances[c]) sel.approvals.insert(c);
  return sel;
}

class Server {
 public:
  Server(ElectionConfig config, std::set<std::string> eligible)
      : config_(std::move(config)), eligible_(std::move(eligible)) {}

  const ElectionConfig& config() const noexcept { return config_; }

  SheetSet issue_sheets(const std::string& voter_id, Rng& rng) {
    if (!eligible_.count(voter_id)) throw Error(Errc::NotEligible, voter_id);
    SheetSet set;
    do {
      set.k = rng.bytes<16>();
    } while (issued_.count(set.k));
    issued_.emplace(set.k, voter_id);

    std::set<std::string> used;
    auto fresh_code = [&] {
      for (;;) {
        std::string code;
        for (std::size_t i = 0; i < kCodeLength; ++i) code.push_back(kCodeAlphabet[rng.uniform(32)]);
        if (used.insert(code).second) return code;
      }
    };
    set.code_sheet.k = set.k;
    for (const Party& p : config_.parties()) {
      set.selection_sheets.push_back({set.k, p.index, p.name, p.candidates});
      auto& row = set.code_sheet.codes.emplace_back();
      for (std::size_t c = 0; c < p.candidates.size(); ++c) {
        std::string for_code = fresh_code();
        row.push_back({std::move(for_code), fresh_code()});
      }
    }
    set.note_sheet.k = set.k;
    code_tables_.emplace(set.k, set.code_sheet);
    return set;
  }

  /// Membership in the issued set. Says nothing about how often k is used.
  bool check_k_valid(const TokenK& k) const { return issued_.count(k) != 0; }

  const CodeSheet* code_table(const TokenK& k) const {
    auto it = code_tables_.find(k);
    return it == code_tables_.end() ? nullptr : &it->second;
  }

  std::size_t issued_count() const noexcept { return issued_.size(); }

 private:
  ElectionConfig config_;
  std::set<std::string> eligible_;
  std::map<TokenK, std::string> issued_;
  std::map<TokenK, CodeSheet> code_tables_;
};

/// The codes a cast selects: per candidate of its party, FOR or AGAINST.
inline std::vector<std::string> selected_codes(const CodeSheet& sheet, const LegacyCast& cast) {
  std::vector<std::string> out;
  const auto& row = sheet.codes.at(cast.party_index);
  for (std::size_t c = 0; c < cast.stances.size(); ++c)
    out.push_back(cast.stances[c] ? row.at(c).for_code : row.at(c).against_code);
  return out;
}

/// The voter copies codes by hand; each copy is wrong with probability
/// `copy_error`.
inline NoteSheet fill_note_sheet(const CodeSheet& sheet, const LegacyCast& cast, double copy_error, Rng& rng) {
  NoteSheet note{sheet.k, selected_codes(sheet, cast)};
  for (auto& code : note.codes) {
    if (rng.chance(copy_error)) {
      const std::size_t pos = rng.uniform(kCodeLength);
      const std::size_t shift = 1 + rng.uniform(31);
      const auto idx = kCodeAlphabet.find(code[pos]);
      code[pos] = kCodeAlphabet[(idx + shift) % 32];
    }
  }
  return note;
}

struct CodePublication {
  TokenK k{};
  std::vector<std::string> codes;
  bool operator==(const CodePublication&) const = default;
};

struct LegacyTallyResult {
  VoteCounts counts;
  std::vector<std::size_t> counted;      ///< cast positions counted
  std::vector<std::size_t> invalidated;  ///< positions sharing a k with another cast
  std::vector<std::size_t> unknown_k;    ///< k never issued
  std::vector<std::size_t> malformed;    ///< stances do not match the party
  std::vector<CodePublication> published;
};

/// Counts casts whose k was issued and appears exactly once. Every cast
/// sharing a k with another is invalidated: the tallier cannot tell k reuse
/// by compromised devices from ballot stuffing.
inline LegacyTallyResult legacy_tally(const Server& server, const std::vector<LegacyCast>& casts,
                                      Board* board = nullptr) {
  const ElectionConfig& config = server.config();
  LegacyTallyResult out;
  out.counts = VoteCounts::zero(config);
  std::map<TokenK, std::size_t> uses;
  for (const auto& c : casts) ++uses[c.k];

  std::vector<std::pair<RecordKind, Bytes>> records;
  for (std::size_t i = 0; i < casts.size(); ++i) {
    const LegacyCast& cast = casts[i];
    if (!server.check_k_valid(cast.k)) {
      out.unknown_k.push_back(i);
      continue;
    }
    if (cast.party_index >= config.parties().size() ||
        cast.stances.size() != config.party(cast.party_index).candidates.size()) {
      out.malformed.push_back(i);
      continue;
    }
    if (uses[cast.k] > 1) {
      out.invalidated.push_back(i);
      continue;
    }
    out.counts.add(selection_of(cast));
    out.counted.push_back(i);
    CodePublication pub{cast.k, selected_codes(*server.code_table(cast.k), cast)};
    if (board) {
      std::string line = to_hex(pub.k);
      for (const auto& code : pub.codes) line += " " + code;
      records.emplace_back(RecordKind::CodePublish, Bytes(line.begin(), line.end()));
    }
    out.published.push_back(std::move(pub));
  }
  if (board && !records.empty()) board->append_batch(records);
  return out;
}

/// Anyone holding a voter's code sheet can read the vote off the public
/// code publication: the code sheet is a receipt.
inline std::optional<VoteSelection> reconstruct_vote(const CodeSheet& sheet, const CodePublication& pub) {
  if (sheet.k != pub.k || pub.codes.empty()) return std::nullopt;
  std::optional<std::size_t> party;
  VoteSelection sel;
  for (std::size_t i = 0; i < pub.codes.size(); ++i) {
    bool found = false;
    for (std::size_t p = 0; p < sheet.codes.size() && !found; ++p) {
      for (std::size_t c = 0; c < sheet.codes[p].size() && !found; ++c) {
        const auto& cc = sheet.codes[p][c];
        if (pub.codes[i] != cc.for_code && pub.codes[i] != cc.against_code) continue;
        if ((party && *party != p) || c != i) return std::nullopt;
        party = p;
        if (pub.codes[i] == cc.for_code) sel.approvals.insert(c);
        found = true;
      }
    }
    if (!found) return std::nullopt;
  }
  sel.party_index = *party;
  return sel;
}

// ---------------------------------------------------------------------------
// k-reuse attack scenario

/// Scenario file directives: `HONEST <n>`, `COMPROMISED <m>`, `SEED <s>`,
/// `COPY_ERROR <p>`. `#` lines are comments.
struct Scenario {
  std::size_t honest = 0;
  std::size_t compromised = 0;
  std::uint64_t seed = 0;
  double copy_error = 0.0;
};

inline Scenario parse_scenario(std::istream& in) {
  Scenario s;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key) || key[0] == '#') continue;
    bool ok = true;
    if (key == "HONEST") ok = static_cast<bool>(ls >> s.honest);
    else if (key == "COMPROMISED") ok = static_cast<bool>(ls >> s.compromised);
    else if (key == "SEED") ok = static_cast<bool>(ls >> s.seed);
    else if (key == "COPY_ERROR") ok = static_cast<bool>(ls >> s.copy_error) && s.copy_error >= 0 && s.copy_error <= 1;
    else ok = false;
    std::string extra;
    if (!ok || (ls >> extra)) throw Error(Errc::ParseError, "scenario line " + std::to_string(lineno));
  }
  return s;
}

struct ScenarioVoter {
  std::string voter_id;
  VoteSelection selection;
  bool compromised = false;
};

inline VoteSelection random_selection(const ElectionConfig& config, Rng& rng) {
  VoteSelection sel;
  sel.party_index = rng.uniform(config.parties().size());
  const std::size_t n = config.party(sel.party_index).candidates.size();
  for (std::size_t c = 0; c < n; ++c)
    if (rng.uniform(2)) sel.approvals.insert(c);
  return sel;
}

/// Deterministic voter population for a scenario; which devices are
/// compromised is drawn from the seed.
inline std::vector<ScenarioVoter> scenario_population(const ElectionConfig& config, const Scenario& s) {
  Rng rng(s.seed);
  Rng pick = rng.split("compromised");
  const std::size_t total = s.honest + s.compromised;
  std::vector<ScenarioVoter> voters(total);
  for (std::size_t i = 0; i < total; ++i) {
    voters[i].voter_id = "voter" + std::to_string(i);
    voters[i].selection = random_selection(config, rng);
  }
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < s.compromised; ++i) {
    std::swap(order[i], order[i + pick.uniform(total - i)]);
    voters[order[i]].compromised = true;
  }
  return voters;
}

struct ScenarioReport {
  std::size_t honest = 0;
  std::size_t compromised = 0;
  std::size_t counted = 0;
  std::size_t invalidated = 0;
  std::size_t unknown_k = 0;
  std::size_t compromised_passed_check = 0;
  std::size_t note_sheet_matches = 0;
  std::size_t note_sheet_mismatches = 0;
  std::size_t receipts_attempted = 0;
  std::size_t receipts_reconstructed = 0;
  std::vector<std::string> disenfranchised;  ///< voter ids whose casts were invalidated
  VoteCounts counts;
};

/// Drives issuance, casting and tallying for a population in which the
/// compromised devices all print one shared, legitimately issued k.
inline ScenarioReport attack_k_reuse(const ElectionConfig& config, const Scenario& s, Board* board = nullptr) {
  if (s.compromised == 1) throw Error(Errc::InvariantViolation, "a k-reuse attack needs at least 2 devices");
  const auto voters = scenario_population(config, s);
  std::set<std::string> eligible;
  for (const auto& v : voters) eligible.insert(v.voter_id);
  Server server(config, eligible);
  Rng rng = Rng(s.seed).split("legacy-run");

  std::vector<SheetSet> sheets;
  sheets.reserve(voters.size());
  for (const auto& v : voters) sheets.push_back(server.issue_sheets(v.voter_id, rng));

  std::optional<TokenK> shared;
  ScenarioReport report;
  report.honest = s.honest;
  report.compromised = s.compromised;
  std::vector<LegacyCast> casts;
  for (std::size_t i = 0; i < voters.size(); ++i) {
    TokenK k = sheets[i].k;
    if (voters[i].compromised) {
      if (!shared) shared = k;
      k = *shared;
      // The voter's own k check passes: the shared k is a genuine one.
      if (server.check_k_valid(k)) ++report.compromised_passed_check;
    }
    casts.push_back(make_cast(config, k, voters[i].selection));
  }

  const LegacyTallyResult result = legacy_tally(server, casts, board);
  report.counted = result.counted.size();
  report.invalidated = result.invalidated.size();
  report.unknown_k = result.unknown_k.size();
  report.counts = result.counts;
  for (std::size_t pos : result.invalidated) report.disenfranchised.push_back(voters[pos].voter_id);

  // Verification replay: each counted voter compares her note sheet with the
  // publication, and a third party holding her code sheet reconstructs the vote.
  for (std::size_t j = 0; j < result.counted.size(); ++j) {
    const std::size_t pos = result.counted[j];
    const CodePublication& pub = result.published[j];
    const NoteSheet note = fill_note_sheet(sheets[pos].code_sheet, casts[pos], s.copy_error, rng);
    if (note.codes == pub.codes) ++report.note_sheet_matches;
    else ++report.note_sheet_mismatches;
    ++report.receipts_attempted;
    if (reconstruct_vote(sheets[pos].code_sheet, pub) == voters[pos].selection) ++report.receipts_reconstructed;
  }
  return report;
}

inline std::string format_scenario_report(const ScenarioReport& r) {
  std::string out = "LEGACY SCENARIO\n";
  out += "honest " + std::to_string(r.honest) + "\n";
  out += "compromised " + std::to_string(r.compromised) + "\n";
  out += "[counted]\n";
  out += "counted " + std::to_string(r.counted) + "\n";
  out += "[invalidated]\n";
  out += "invalidated " + std::to_string(r.invalidated) + "\n";
  out += "unknown_k " + std::to_string(r.unknown_k) + "\n";
  out += "compromised_passed_check " + std::to_string(r.compromised_passed_check) + "\n";
  for (const auto& id : r.disenfranchised) out += "disenfranchised " + id + "\n";
  out += "[verification]\n";
  out += "note_sheet_matches " + std::to_string(r.note_sheet_matches) + "\n";
  out += "note_sheet_mismatches " + std::to_string(r.note_sheet_mismatches) + "\n";
  out += "[receipt-reconstruction]\n";
  out += "receipts_attempted " + std::to_string(r.receipts_attempted) + "\n";
  out += "receipts_reconstructed " + std::to_string(r.receipts_reconstructed) + "\n";
  return out;
}

}  // namespace bpv::legacy
